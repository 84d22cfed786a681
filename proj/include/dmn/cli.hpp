#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dmn::cli {

// Exit codes.
constexpr int kOk = 0;
constexpr int kNegative = 1;  // verify: subset is not PI
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmn::cli

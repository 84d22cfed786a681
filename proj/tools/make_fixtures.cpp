// Writes the shipped model fixtures into the given directory.
#include <filesystem>
#include <iostream>

#include "dmn/modelgen.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  try {
    std::filesystem::create_directories(dir);
    dmn::write_model(dmn::table1_model(), dir / "table1.model");
    dmn::write_model(dmn::parity_model(3, 0.05), dir / "parity3.model");
    dmn::write_model(dmn::pim_like_model(26, {3}, 0.05, 1), dir / "pim1-like.model");
    dmn::write_model(dmn::pim_like_model(30, {3, 3}, 0.05, 2), dir / "pim2-like.model");
    dmn::write_model(dmn::pim_like_model(35, {3, 3}, 0.05, 3), dir / "pim3-like.model");
    dmn::write_model(dmn::pim_like_model(16, {4}, 0.05, 4), dir / "pim4-like.model");
    dmn::write_model(dmn::pim_like_model(12, {3, 3}, 0.05, 5), dir / "pim3-like-small.model");
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

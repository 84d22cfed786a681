#pragma once

#include <limits>
#include <stdexcept>

namespace dmn {

class PlanError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Split of W' workers into n explorers and m marginal servers. Sizes in MB.
struct RuntimePlan {
  int explorers = 1;           // n
  int servers = 0;             // m
  double explorer_data = 0.0;  // |D_e|
  double server_data = 0.0;    // |D_m|, 0 without servers
  double alpha = 0.0;          // k_g / k_d
  double memory_limit = std::numeric_limits<double>::infinity();  // M_d
};

// Balances n·k_d·|D_m| = k_g·N + k_d·|D_e| with |D| = m·|D_m| + |D_e|:
//   n = W'(αN + |D_e|) / (αN + |D|),  m = W'(|D| − |D_e|) / (αN + |D|).
// m is rounded to nearest (kept within [1, W'−1] when servers are needed),
// n = W' − m, and |D_m| = (|D| − |D_e|) / m.
RuntimePlan plan_partition(double data_mb, int variables, int workers, double alpha, double explorer_mb,
                           double memory_limit_mb = std::numeric_limits<double>::infinity());

struct TopologyEstimate {
  int processors = 1;
  int mesh_max_hops = 0;             // D_max
  int tree_max_hops = 0;             // T_max, manager to explorer
  int explorer_server_max_hops = 0;  // 2·T_max
};

// Mesh: side s = ceil(sqrt(W)), r = ceil(W/s) rows, D_max = (s−1)+(r−1),
// which is 2(√W − 1) for square W. Ternary tree: T_max = ceil(log3(2W+1)) − 1.
TopologyEstimate topology_estimate(int processors);

// Message time in seconds, bilinear over the measured grid (256..16384
// bytes, 1..31 links); clamped outside it.
double estimate_message_time(double length_bytes, double hops);

}  // namespace dmn

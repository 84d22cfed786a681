#include "dmn/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dmn {

RuntimePlan plan_partition(double data_mb, int variables, int workers, double alpha, double explorer_mb,
                           double memory_limit_mb) {
  if (workers < 2) throw PlanError("at least two workers are required");
  if (variables < 1) throw PlanError("variable count must be positive");
  if (!(alpha >= 0.0) || !(data_mb > 0.0) || !(explorer_mb > 0.0)) throw PlanError("sizes and alpha must be positive");
  if (explorer_mb > data_mb) throw PlanError("explorer data exceeds the dataset");
  if (explorer_mb > memory_limit_mb) throw PlanError("explorer data exceeds local memory");

  RuntimePlan plan;
  plan.alpha = alpha;
  plan.explorer_data = explorer_mb;
  plan.memory_limit = memory_limit_mb;
  if (data_mb <= explorer_mb) {
    plan.explorers = workers;
    plan.servers = 0;
    plan.explorer_data = data_mb;
    return plan;
  }
  const double graph_cost = alpha * variables;
  const double m_exact = workers * (data_mb - explorer_mb) / (graph_cost + data_mb);
  int m = static_cast<int>(std::lround(m_exact));
  m = std::clamp(m, 1, workers - 1);
  plan.servers = m;
  plan.explorers = workers - m;
  plan.server_data = (data_mb - explorer_mb) / m;
  return plan;
}

TopologyEstimate topology_estimate(int processors) {
  if (processors < 1) throw PlanError("processor count must be positive");
  TopologyEstimate t;
  t.processors = processors;
  int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(processors)) - 1e-12));
  while (side * side < processors) ++side;
  while (side > 1 && (side - 1) * (side - 1) >= processors) --side;
  const int rows = (processors + side - 1) / side;
  t.mesh_max_hops = (side - 1) + (rows - 1);

  const long target = 2L * processors + 1;
  int k = 0;
  for (long power = 1; power < target; power *= 3) ++k;
  t.tree_max_hops = k - 1;
  t.explorer_server_max_hops = 2 * t.tree_max_hops;
  return t;
}

namespace {

constexpr std::array<double, 4> kLengths{256, 1024, 4096, 16384};
constexpr std::array<double, 6> kHops{1, 2, 3, 7, 15, 31};
constexpr std::array<std::array<double, 4>, 6> kSeconds{{
    {0.015, 0.016, 0.023, 0.096},
    {0.016, 0.020, 0.035, 0.129},
    {0.017, 0.022, 0.044, 0.125},
    {0.021, 0.032, 0.081, 0.165},
    {0.030, 0.057, 0.160, 0.241},
    {0.051, 0.105, 0.328, 0.409},
}};

// Bracketing index and weight of x on a sorted axis, clamped.
template <std::size_t N>
std::pair<std::size_t, double> locate(const std::array<double, N>& axis, double x) {
  if (x <= axis.front()) return {0, 0.0};
  if (x >= axis.back()) return {N - 2, 1.0};
  std::size_t i = 0;
  while (axis[i + 1] < x) ++i;
  return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
}

}  // namespace

double estimate_message_time(double length_bytes, double hops) {
  if (!(length_bytes > 0.0) || !(hops >= 1.0)) throw PlanError("message length must be positive and hops >= 1");
  auto [li, lw] = locate(kLengths, length_bytes);
  auto [hi, hw] = locate(kHops, hops);
  auto at = [&](std::size_t h, std::size_t l) { return kSeconds[h][l]; };
  const double lo = at(hi, li) * (1 - lw) + at(hi, li + 1) * lw;
  const double up = at(hi + 1, li) * (1 - lw) + at(hi + 1, li + 1) * lw;
  return lo * (1 - hw) + up * hw;
}

}  // namespace dmn

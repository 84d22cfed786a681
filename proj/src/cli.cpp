#include "dmn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "dmn/data.hpp"
#include "dmn/graph.hpp"
#include "dmn/modelgen.hpp"
#include "dmn/planner.hpp"
#include "dmn/runtime.hpp"
#include "dmn/search.hpp"

namespace dmn::cli {

namespace {

// Flag combination that cannot run; reported as a usage error.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

DataFormat format_for(const std::string& path) {
  return std::filesystem::path(path).extension() == ".bin" ? DataFormat::binary : DataFormat::text;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

struct GenerateArgs {
  std::string model;
  std::string out;
  bool expected = false;
  double total = 10000;
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (a.expected == (a.count > 0)) throw UsageError("generate needs exactly one of --expected or --count");
  ClusterModel model = read_model(a.model);
  FrequencyTable data = a.expected ? expected_counts(model, a.total) : sample(model, a.count, a.seed);
  write_dataset(data, a.out, format_for(a.out));
  out << "wrote " << a.out << ": " << data.scheme().size() << " variables, " << data.row_count() << " rows, total "
      << data.total().to_string() << "\n";
  return kOk;
}

struct LearnArgs {
  std::string data;
  SearchConfig search;
  int explorers = 0;  // 0: not given
  int servers = 0;
  std::string mode = "auto";
  std::string out;
};

// Without --mode: servers imply two-stage, several explorers imply even.
std::string resolve_mode(const LearnArgs& a) {
  if (a.mode != "auto") return a.mode;
  if (a.servers > 0) return "two-stage";
  if (a.explorers > 1) return "even";
  return "sequential";
}

std::unique_ptr<Executor> make_executor(const FrequencyTable& data, int eta, const std::string& mode, int explorers,
                                        int servers) {
  if (mode == "sequential") {
    if (servers > 0) throw UsageError("servers require --mode two-stage");
    return std::make_unique<SequentialExecutor>(data);
  }
  RuntimeOptions options;
  options.explorers = std::max(explorers, 1);
  options.servers = servers;
  if (mode == "even") {
    if (servers > 0) throw UsageError("servers require --mode two-stage");
    options.allocation = Allocation::even;
  } else if (mode == "two-stage") {
    options.allocation = Allocation::two_stage;
  } else {
    throw UsageError("unknown mode '" + mode + "'");
  }
  return std::make_unique<ParallelExecutor>(data, eta, options);
}

int cmd_learn(const LearnArgs& a, std::ostream& out) {
  try {
    a.search.validate();
  } catch (const SearchError& e) {
    throw UsageError(e.what());
  }
  const std::string mode = resolve_mode(a);
  FrequencyTable data = read_dataset(a.data, format_for(a.data));
  auto executor = make_executor(data, a.search.eta, mode, a.explorers, a.servers);
  LearnResult result = learn(a.search, *executor);

  const std::string prefix = a.out.empty() ? std::filesystem::path(a.data).stem().string() : a.out;
  write_graph(result.graph, prefix + ".graph");
  std::ofstream trace(prefix + ".trace", std::ios::trunc);
  if (!trace) throw std::runtime_error("cannot write '" + prefix + ".trace'");
  trace << format_trace(result.trace);

  const Scheme& scheme = data.scheme();
  out << "mode " << mode << ", " << result.trace.passes.size() << " passes, " << result.graph.edge_count()
      << " edges\n";
  for (auto [u, v] : result.graph.edges()) out << "  " << scheme[u].name << " - " << scheme[v].name << "\n";
  out << "wrote " << prefix << ".graph and " << prefix << ".trace\n";
  return kOk;
}

struct PlanArgs {
  double data = 0;
  int vars = 0;
  int workers = 0;
  double alpha = 0;
  double de = 0;
  double memory = std::numeric_limits<double>::infinity();
};

int cmd_plan(const PlanArgs& a, std::ostream& out) {
  RuntimePlan plan;
  try {
    plan = plan_partition(a.data, a.vars, a.workers, a.alpha, a.de, a.memory);
  } catch (const PlanError& e) {
    throw UsageError(e.what());
  }
  out << "explorers n = " << plan.explorers << "\n";
  out << "servers m = " << plan.servers << "\n";
  out << "explorer data |D_e| = " << fixed(plan.explorer_data, 4) << " MB\n";
  out << "server data |D_m| = " << fixed(plan.server_data, 4) << " MB\n";
  if (plan.servers == 0) out << "dataset fits in explorer memory; no marginal servers\n";

  const int processors = a.workers + 1;
  TopologyEstimate t = topology_estimate(processors);
  out << "W = " << processors << "\n";
  out << "mesh D_max = " << t.mesh_max_hops << "\n";
  out << "ternary tree T_max = " << t.tree_max_hops << " (explorer-server " << t.explorer_server_max_hops << ")\n";
  out << "message time (s)\tbytes\tD_max\tT_max\t2T_max\n";
  for (double bytes : {256.0, 1024.0, 4096.0, 16384.0}) {
    auto at = [&](int hops) { return fixed(estimate_message_time(bytes, std::max(hops, 1)), 4); };
    out << "\t" << bytes << "\t" << at(t.mesh_max_hops) << "\t" << at(t.tree_max_hops) << "\t"
        << at(t.explorer_server_max_hops) << "\n";
  }
  return kOk;
}

struct BenchArgs {
  std::string data;
  SearchConfig search;
  std::vector<int> workers{1, 2, 4};
  int servers = 1;
  int repetitions = 3;
};

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

int cmd_bench(BenchArgs a, std::ostream& out) {
  try {
    a.search.validate();
  } catch (const SearchError& e) {
    throw UsageError(e.what());
  }
  if (a.workers.empty() || a.repetitions < 1 || a.servers < 1) throw UsageError("bench needs workers, k >= 1, m >= 1");
  for (int n : a.workers)
    if (n < 1) throw UsageError("worker counts must be positive");
  if (std::find(a.workers.begin(), a.workers.end(), 1) == a.workers.end()) a.workers.insert(a.workers.begin(), 1);
  std::sort(a.workers.begin(), a.workers.end());
  a.workers.erase(std::unique(a.workers.begin(), a.workers.end()), a.workers.end());

  FrequencyTable data = read_dataset(a.data, format_for(a.data));
  out << "mode\tn\tm\ttime_s\tspeedup\tefficiency\tidle_mean_s\tidle_max_s\tedges\n";
  for (Allocation allocation : {Allocation::even, Allocation::two_stage}) {
    double baseline = 0.0;
    for (int n : a.workers) {
      std::vector<double> times;
      std::vector<double> idle;
      std::size_t edges = 0;
      for (int r = 0; r < a.repetitions; ++r) {
        RuntimeOptions options;
        options.allocation = allocation;
        options.explorers = n;
        options.servers = allocation == Allocation::two_stage ? a.servers : 0;
        ParallelExecutor executor(data, a.search.eta, options);
        const auto start = std::chrono::steady_clock::now();
        LearnResult result = learn(a.search, executor);
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        edges = result.graph.edge_count();
        auto per = executor.stats().explorer_idle_seconds();
        idle.insert(idle.end(), per.begin(), per.end());
      }
      const double t = median(times);
      if (n == 1) baseline = t;
      const double s = n == 1 ? 1.0 : baseline / t;
      const double e = s / n;
      double idle_sum = 0.0, idle_max = 0.0;
      for (double x : idle) {
        idle_sum += x;
        idle_max = std::max(idle_max, x);
      }
      out << (allocation == Allocation::even ? "even" : "two-stage") << "\t" << n << "\t" << (allocation == Allocation::two_stage ? a.servers : 0)
          << "\t" << fixed(t, 6) << "\t" << fixed(s, 6) << "\t" << fixed(e, 6) << "\t"
          << fixed(idle.empty() ? 0.0 : idle_sum / idle.size(), 6) << "\t" << fixed(idle_max, 6) << "\t" << edges
          << "\n";
    }
  }
  return kOk;
}

struct VerifyArgs {
  std::string model;
  std::string subset;
  double tolerance = 1e-9;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  ClusterModel model = read_model(a.model);
  VarSubset subset;
  std::stringstream names(a.subset);
  for (std::string name; std::getline(names, name, ',');) {
    if (name.empty()) continue;
    try {
      subset.push_back(model.scheme().index_of(name));
    } catch (const DataError&) {
      throw UsageError("unknown variable '" + name + "'");
    }
  }
  if (subset.size() < 3) throw UsageError("--subset needs at least three variables");
  PiReport report = verify_pi(model, subset, a.tolerance);
  const Scheme& scheme = model.scheme();
  for (const auto& p : report.pairs) {
    char dev[32];
    std::snprintf(dev, sizeof dev, "%.3e", p.deviation);
    out << scheme[p.a].name << " " << scheme[p.b].name << "\t" << (p.independent ? "independent" : "dependent")
        << "\tmax|P(a,b)-P(a)P(b)| = " << dev << "\n";
  }
  out << "collective dependence: " << (report.collective ? "yes" : "no") << "\n";
  out << (report.is_pi() ? "PI submodel" : "not a PI submodel") << " (tol " << a.tolerance << ")\n";
  return report.is_pi() ? kOk : kNegative;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structure learning for decomposable Markov networks"};
  app.name("dmn");
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file mirroring the flags");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a dataset from a model file");
  generate->add_option("model", gen.model, "Model file")->required()->check(CLI::ExistingFile);
  generate->add_flag("--expected", gen.expected, "Expected counts instead of sampling");
  generate->add_option("--total", gen.total, "Total for --expected")->check(CLI::PositiveNumber);
  generate->add_option("--count", gen.count, "Number of sampled cases");
  generate->add_option("--seed", gen.seed, "Sampling seed");
  generate->add_option("-o,--out", gen.out, "Dataset path (.bin for binary)")->required();

  LearnArgs lrn;
  auto* learn_cmd = app.add_subcommand("learn", "Learn a structure");
  learn_cmd->add_option("data", lrn.data, "Dataset file")->required()->check(CLI::ExistingFile);
  learn_cmd->add_option("--eta", lrn.search.eta, "Max clique size");
  learn_cmd->add_option("--kappa", lrn.search.kappa, "Max links per move");
  learn_cmd->add_option("--delta-h", lrn.search.delta_h, "Entropy decrement threshold (bits)");
  learn_cmd->add_option("-n,--explorers", lrn.explorers, "Explorer count")->check(CLI::PositiveNumber);
  learn_cmd->add_option("-m,--servers", lrn.servers, "Marginal server count")->check(CLI::NonNegativeNumber);
  learn_cmd->add_option("--mode", lrn.mode, "sequential, even or two-stage")
      ->check(CLI::IsMember({"auto", "sequential", "even", "two-stage"}));
  learn_cmd->add_option("--out", lrn.out, "Output prefix for .graph and .trace");

  PlanArgs pln;
  auto* plan = app.add_subcommand("plan", "Split workers into explorers and marginal servers");
  plan->add_option("--data", pln.data, "Dataset size |D| (MB)")->required();
  plan->add_option("--vars", pln.vars, "Variable count N")->required();
  plan->add_option("--workers", pln.workers, "Workers W' excluding the manager")->required();
  plan->add_option("--alpha", pln.alpha, "k_g / k_d")->required();
  plan->add_option("--de", pln.de, "Explorer data |D_e| (MB)")->required();
  plan->add_option("--memory", pln.memory, "Local memory M_d (MB)");

  BenchArgs bch;
  auto* bench = app.add_subcommand("bench", "Time learn across explorer counts, TSV output");
  bench->add_option("data", bch.data, "Dataset file")->required()->check(CLI::ExistingFile);
  bench->add_option("--eta", bch.search.eta, "Max clique size");
  bench->add_option("--kappa", bch.search.kappa, "Max links per move");
  bench->add_option("--delta-h", bch.search.delta_h, "Entropy decrement threshold (bits)");
  bench->add_option("--workers", bch.workers, "Explorer counts")->delimiter(',');
  bench->add_option("-m,--servers", bch.servers, "Servers for two-stage rows");
  bench->add_option("-k,--repetitions", bch.repetitions, "Runs per row; the median is reported");

  VerifyArgs vfy;
  auto* verify = app.add_subcommand("verify", "Check whether a subset is a PI submodel");
  verify->add_option("model", vfy.model, "Model file")->required()->check(CLI::ExistingFile);
  verify->add_option("--subset", vfy.subset, "Comma-separated variable names")->required();
  verify->add_option("--tol", vfy.tolerance, "Tolerance on exact marginals");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "dmn: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*generate) return cmd_generate(gen, out);
    if (*learn_cmd) return cmd_learn(lrn, out);
    if (*plan) return cmd_plan(pln, out);
    if (*bench) return cmd_bench(bch, out);
    if (*verify) return cmd_verify(vfy, out);
  } catch (const UsageError& e) {
    err << "dmn: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "dmn: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace dmn::cli

#include "dmn/runtime.hpp"

#include <algorithm>
#include <stdexcept>

namespace dmn {

struct Network {
  Mailbox<Message> manager;
  std::vector<std::unique_ptr<Mailbox<Message>>> explorers;
  std::vector<std::unique_ptr<Mailbox<Message>>> servers;

  Network(int n, int m) {
    for (int i = 0; i < n; ++i) explorers.push_back(std::make_unique<Mailbox<Message>>());
    for (int i = 0; i < m; ++i) servers.push_back(std::make_unique<Mailbox<Message>>());
  }
};

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Thrown inside a worker when Terminate arrives mid-request.
struct Terminated {};

[[noreturn]] void unexpected(const std::string& role, const Message& m) {
  throw RuntimeFailure(role + ": unexpected message (variant " + std::to_string(m.index()) + ")");
}

// Explorer-side view of the data when servers hold most of it: local
// sub-marginal plus the pipeline's sum.
class PipelineSource final : public MarginalSource {
 public:
  PipelineSource(Network& net, int explorer, std::shared_ptr<const FrequencyTable> shard,
                 std::chrono::milliseconds timeout)
      : net_(net), explorer_(explorer), shard_(std::move(shard)), timeout_(timeout) {}

  const Scheme& scheme() const override { return shard_->scheme(); }

  MarginalTable marginal(std::span<const int> subset) override {
    const std::uint64_t id = (static_cast<std::uint64_t>(explorer_) << 40) | next_id_++;
    net_.servers.front()->send(msg::MarginalRequest{id, explorer_, VarSubset(subset.begin(), subset.end())});
    MarginalTable local = project(*shard_, subset);
    auto reply = net_.explorers[explorer_]->receive_for(timeout_);
    if (!reply) throw RuntimeFailure("marginal request " + std::to_string(id) + " unanswered");
    if (std::holds_alternative<msg::Terminate>(*reply)) throw Terminated{};
    auto* sub = std::get_if<msg::SubMarginal>(&*reply);
    if (!sub || sub->request_id != id) throw RuntimeFailure("explorer received a reply for another request");
    return merge_counts(local, sub->marginal);
  }

 private:
  Network& net_;
  int explorer_;
  std::shared_ptr<const FrequencyTable> shard_;
  std::chrono::milliseconds timeout_;
  std::uint64_t next_id_ = 0;
};

std::vector<std::size_t> filter_range(const Graph& g, const CandidateList& candidates, std::size_t begin,
                                      std::size_t end, int eta) {
  std::vector<std::size_t> valid;
  for (std::size_t i = begin; i < end; ++i)
    if (is_legal_move(g, candidates[i], eta)) valid.push_back(i);
  return valid;
}

template <class Indices>
msg::Report score(int worker, const Graph& g, const JunctionForest& forest, const CandidateList& candidates,
                  const Indices& indices, int eta, MarginalSource& source) {
  msg::Report report;
  report.worker = worker;
  for (std::size_t i : indices) {
    auto move = evaluate_candidate(g, forest, candidates[i], eta, source, i);
    if (!move.valid) continue;
    ++report.valid;
    report.min_dh = std::min(report.min_dh.value_or(*move.dh), *move.dh);
    if (!report.best || better_move(move, *report.best)) report.best = std::move(move);
  }
  return report;
}

struct IndexIterator {
  std::size_t i;
  std::size_t operator*() const { return i; }
  IndexIterator& operator++() {
    ++i;
    return *this;
  }
  bool operator!=(const IndexIterator& o) const { return i != o.i; }
};

struct RangeView {
  std::size_t lo, hi;
  IndexIterator begin() const { return {lo}; }
  IndexIterator end() const { return {hi}; }
};

void run_explorer(std::shared_ptr<Network> net, int id, RuntimeOptions options) {
  const std::string role = "explorer " + std::to_string(id);
  auto& inbox = *net->explorers[id];
  try {
    Message first = inbox.receive();
    if (std::holds_alternative<msg::Terminate>(first)) return;
    auto* init = std::get_if<msg::Init>(&first);
    if (!init) unexpected(role, first);
    const auto shard = init->shard;
    const int eta = init->eta;

    std::unique_ptr<MarginalSource> source;
    if (net->servers.empty())
      source = std::make_unique<TableSource>(*shard);
    else
      source = std::make_unique<PipelineSource>(*net, id, shard, options.reply_timeout);

    Graph graph;
    JunctionForest forest;
    std::shared_ptr<const CandidateList> candidates;
    for (;;) {
      Message m = inbox.receive();
      if (std::holds_alternative<msg::Terminate>(m)) return;
      const auto start = Clock::now();
      if (auto* job = std::get_if<msg::Job>(&m)) {
        if (id == options.fail_explorer) throw RuntimeFailure("injected failure");
        graph = std::move(job->graph);
        forest = build_forest(graph);
        candidates = job->candidates;
        if (job->filter_only) {
          msg::StageOneReport report{id, filter_range(graph, *candidates, job->begin, job->end, eta), 0.0};
          report.busy_seconds = seconds_since(start);
          net->manager.send(std::move(report));
        } else {
          auto report = score(id, graph, forest, *candidates, RangeView{job->begin, job->end}, eta, *source);
          report.busy_seconds = seconds_since(start);
          net->manager.send(std::move(report));
        }
      } else if (auto* stage_two = std::get_if<msg::StageTwoJob>(&m)) {
        auto report = score(id, graph, forest, *candidates, stage_two->indices, eta, *source);
        report.busy_seconds = seconds_since(start);
        net->manager.send(std::move(report));
      } else {
        unexpected(role, m);
      }
    }
  } catch (const Terminated&) {
    return;
  } catch (const std::exception& e) {
    net->manager.send(msg::Failure{role, e.what()});
  }
}

// Server k of m (0-based). Filters candidates in stage one and adds its
// sub-marginal to every request passing through the pipeline.
void run_server(std::shared_ptr<Network> net, int k, int explorer_count, RuntimeOptions options) {
  const std::string role = "server " + std::to_string(k);
  auto& inbox = *net->servers[k];
  const bool last = k + 1 == static_cast<int>(net->servers.size());
  try {
    Message first = inbox.receive();
    if (std::holds_alternative<msg::Terminate>(first)) return;
    auto* init = std::get_if<msg::Init>(&first);
    if (!init) unexpected(role, first);
    const auto shard = init->shard;
    const int eta = init->eta;

    auto forward = [&](msg::SubMarginal part) {
      if (last)
        net->explorers.at(part.requester)->send(std::move(part));
      else
        net->servers[k + 1]->send(std::move(part));
    };
    for (;;) {
      Message m = inbox.receive();
      if (std::holds_alternative<msg::Terminate>(m)) return;
      if (auto* job = std::get_if<msg::Job>(&m)) {
        const auto start = Clock::now();
        msg::StageOneReport report{explorer_count + k, {}, 0.0};
        report.valid = filter_range(job->graph, *job->candidates, job->begin, job->end, eta);
        report.busy_seconds = seconds_since(start);
        net->manager.send(std::move(report));
      } else if (auto* req = std::get_if<msg::MarginalRequest>(&m)) {
        if (k == options.fail_server) throw RuntimeFailure("injected failure");
        forward({req->request_id, req->requester, project(*shard, req->subset)});
      } else if (auto* sub = std::get_if<msg::SubMarginal>(&m)) {
        if (k == options.fail_server) throw RuntimeFailure("injected failure");
        auto own = project(*shard, sub->marginal.subset());
        forward({sub->request_id, sub->requester, merge_counts(sub->marginal, own)});
      } else {
        unexpected(role, m);
      }
    }
  } catch (const std::exception& e) {
    net->manager.send(msg::Failure{role, e.what()});
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<IndexRange> partition_candidates(std::size_t total, std::size_t n) {
  if (n == 0) throw std::invalid_argument("partition_candidates needs at least one worker");
  std::vector<IndexRange> out;
  out.reserve(n);
  const std::size_t base = total / n, extra = total % n;
  std::size_t at = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t size = base + (k < extra ? 1 : 0);
    out.push_back({at, at + size});
    at += size;
  }
  return out;
}

PassOutcome merge_reports(std::span<const msg::Report> reports) {
  PassOutcome out;
  for (const auto& r : reports) {
    out.valid += r.valid;
    if (r.min_dh) out.min_dh = std::min(out.min_dh.value_or(*r.min_dh), *r.min_dh);
    if (r.best && (!out.best || better_move(*r.best, *out.best))) out.best = r.best;
  }
  return out;
}

std::vector<double> RuntimeStats::explorer_idle_seconds() const {
  std::vector<double> idle;
  for (double busy : explorer_busy_seconds) idle.push_back(std::max(0.0, wall_seconds - busy));
  return idle;
}

ParallelExecutor::ParallelExecutor(const FrequencyTable& data, int eta, RuntimeOptions options)
    : scheme_(data.scheme()), eta_(eta), options_(options) {
  if (options_.explorers < 1) throw std::invalid_argument("at least one explorer is required");
  if (options_.servers < 0) throw std::invalid_argument("server count must be non-negative");
  if (options_.servers > 0 && options_.allocation != Allocation::two_stage)
    throw std::invalid_argument("marginal servers require two-stage allocation");

  const int n = options_.explorers, m = options_.servers;
  net_ = std::make_shared<Network>(n, m);
  stats_.explorer_busy_seconds.assign(n, 0.0);
  stats_.server_busy_seconds.assign(m, 0.0);

  std::shared_ptr<const FrequencyTable> explorer_data;
  std::vector<std::shared_ptr<const FrequencyTable>> server_data;
  if (m == 0) {
    explorer_data = std::make_shared<const FrequencyTable>(data);
  } else {
    auto shards = data.shard(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k < m; ++k) server_data.push_back(std::make_shared<const FrequencyTable>(std::move(shards[k])));
    explorer_data = std::make_shared<const FrequencyTable>(std::move(shards[m]));
  }

  for (int k = 0; k < m; ++k) threads_.emplace_back(run_server, net_, k, n, options_);
  for (int k = 0; k < n; ++k) threads_.emplace_back(run_explorer, net_, k, options_);
  for (int k = 0; k < m; ++k) net_->servers[k]->send(msg::Init{server_data[k], eta_});
  for (int k = 0; k < n; ++k) net_->explorers[k]->send(msg::Init{explorer_data, eta_});
}

ParallelExecutor::~ParallelExecutor() { shutdown(); }

void ParallelExecutor::shutdown() {
  if (!net_) return;
  for (auto& box : net_->explorers) box->send(msg::Terminate{});
  for (auto& box : net_->servers) box->send(msg::Terminate{});
  for (auto& t : threads_)
    if (t.joinable()) t.join();
  threads_.clear();
}

Message ParallelExecutor::await_from_workers() {
  Message m = net_->manager.receive();
  if (auto* f = std::get_if<msg::Failure>(&m)) {
    failed_ = true;
    throw RuntimeFailure(f->role + " failed: " + f->what);
  }
  return m;
}

PassOutcome ParallelExecutor::evaluate(const Graph& g, const JunctionForest&,
                                       std::shared_ptr<const CandidateList> candidates, int eta) {
  if (failed_) throw RuntimeFailure("runtime is unusable after a worker failure");
  if (eta != eta_) throw std::invalid_argument("executor was initialised with a different eta");
  const auto start = Clock::now();
  PassOutcome out = options_.allocation == Allocation::even ? evaluate_even(g, std::move(candidates))
                                                            : evaluate_two_stage(g, std::move(candidates));
  stats_.wall_seconds += seconds_since(start);
  ++stats_.passes;
  return out;
}

PassOutcome ParallelExecutor::evaluate_even(const Graph& g, std::shared_ptr<const CandidateList> candidates) {
  const auto n = static_cast<std::size_t>(options_.explorers);
  auto ranges = partition_candidates(candidates->size(), n);
  for (std::size_t k = 0; k < n; ++k)
    net_->explorers[k]->send(msg::Job{g, candidates, ranges[k].begin, ranges[k].end, false});

  std::vector<msg::Report> reports(n);
  for (std::size_t received = 0; received < n; ++received) {
    Message m = await_from_workers();
    auto* r = std::get_if<msg::Report>(&m);
    if (!r) throw RuntimeFailure("manager expected a report");
    stats_.explorer_busy_seconds[r->worker] += r->busy_seconds;
    reports[r->worker] = std::move(*r);
  }
  return merge_reports(reports);
}

PassOutcome ParallelExecutor::evaluate_two_stage(const Graph& g, std::shared_ptr<const CandidateList> candidates) {
  const auto n = static_cast<std::size_t>(options_.explorers);
  const auto m = static_cast<std::size_t>(options_.servers);

  // Stage one: every worker filters an even share.
  auto ranges = partition_candidates(candidates->size(), n + m);
  for (std::size_t w = 0; w < n + m; ++w) {
    msg::Job job{g, candidates, ranges[w].begin, ranges[w].end, true};
    if (w < n)
      net_->explorers[w]->send(std::move(job));
    else
      net_->servers[w - n]->send(std::move(job));
  }
  std::vector<std::size_t> valid;
  for (std::size_t received = 0; received < n + m; ++received) {
    Message msg = await_from_workers();
    auto* r = std::get_if<msg::StageOneReport>(&msg);
    if (!r) throw RuntimeFailure("manager expected a stage-one report");
    if (static_cast<std::size_t>(r->worker) < n)
      stats_.explorer_busy_seconds[r->worker] += r->busy_seconds;
    else
      stats_.server_busy_seconds[r->worker - n] += r->busy_seconds;
    valid.insert(valid.end(), r->valid.begin(), r->valid.end());
  }
  std::sort(valid.begin(), valid.end());

  // Stage two: explorers score an even share of the valid candidates.
  auto slices = partition_candidates(valid.size(), n);
  for (std::size_t k = 0; k < n; ++k)
    net_->explorers[k]->send(msg::StageTwoJob{
        std::vector<std::size_t>(valid.begin() + static_cast<std::ptrdiff_t>(slices[k].begin),
                                 valid.begin() + static_cast<std::ptrdiff_t>(slices[k].end))});
  std::vector<msg::Report> reports(n);
  for (std::size_t received = 0; received < n; ++received) {
    Message msg = await_from_workers();
    auto* r = std::get_if<msg::Report>(&msg);
    if (!r) throw RuntimeFailure("manager expected a report");
    stats_.explorer_busy_seconds[r->worker] += r->busy_seconds;
    reports[r->worker] = std::move(*r);
  }
  PassOutcome out = merge_reports(reports);
  out.valid = valid.size();
  return out;
}

MarginalTable serve_marginal(std::span<const int> subset, const std::vector<FrequencyTable>& shards,
                             std::chrono::milliseconds reply_timeout) {
  if (shards.empty()) throw std::invalid_argument("serve_marginal needs at least one shard");
  const int m = static_cast<int>(shards.size()) - 1;
  if (m == 0) return project(shards[0], subset);

  auto net = std::make_shared<Network>(1, m);
  RuntimeOptions options;
  options.reply_timeout = reply_timeout;
  std::vector<std::thread> servers;
  for (int k = 0; k < m; ++k) {
    servers.emplace_back(run_server, net, k, 1, options);
    net->servers[k]->send(msg::Init{std::make_shared<const FrequencyTable>(shards[k]), 0});
  }
  auto stop = [&] {
    for (auto& box : net->servers) box->send(msg::Terminate{});
    for (auto& t : servers) t.join();
  };
  try {
    PipelineSource source(*net, 0, std::make_shared<const FrequencyTable>(shards[m]), reply_timeout);
    MarginalTable out = source.marginal(subset);
    stop();
    return out;
  } catch (...) {
    stop();
    throw;
  }
}

}  // namespace dmn

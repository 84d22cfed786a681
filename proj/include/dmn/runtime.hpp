#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "dmn/data.hpp"
#include "dmn/graph.hpp"
#include "dmn/search.hpp"

namespace dmn {

class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unbounded FIFO with blocking receive. One per role.
template <class T>
class Mailbox {
 public:
  void send(T message) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(message));
    }
    ready_.notify_one();
  }

  T receive() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [&] { return !queue_.empty(); });
    T out = std::move(queue_.front());
    queue_.pop_front();
    return out;
  }

  std::optional<T> receive_for(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    if (!ready_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
    T out = std::move(queue_.front());
    queue_.pop_front();
    return out;
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> queue_;
};

// ---------------------------------------------------------------------------
// Wire contract between manager, explorers and marginal servers.

namespace msg {

struct Init {
  std::shared_ptr<const FrequencyTable> shard;
  int eta = 0;
};

// Candidates [begin, end) of the shared list. Even allocation scores them;
// two-stage allocation only filters (stage one).
struct Job {
  Graph graph;
  std::shared_ptr<const CandidateList> candidates;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool filter_only = false;
};

struct StageOneReport {
  int worker = 0;  // explorers 0..n-1, then servers n..n+m-1
  std::vector<std::size_t> valid;
  double busy_seconds = 0.0;
};

struct StageTwoJob {
  std::vector<std::size_t> indices;
};

struct Report {
  int worker = 0;
  std::optional<CandidateMove> best;  // nullopt: no valid candidate
  std::size_t valid = 0;
  std::optional<double> min_dh;
  double busy_seconds = 0.0;
};

struct MarginalRequest {
  std::uint64_t request_id = 0;
  int requester = 0;
  VarSubset subset;
};

// Partial sum travelling down the server pipeline, or the final answer
// delivered to the requesting explorer.
struct SubMarginal {
  std::uint64_t request_id = 0;
  int requester = 0;
  MarginalTable marginal;
};

struct Failure {
  std::string role;
  std::string what;
};

struct Terminate {};

}  // namespace msg

using Message = std::variant<msg::Init, msg::Job, msg::StageOneReport, msg::StageTwoJob, msg::Report,
                             msg::MarginalRequest, msg::SubMarginal, msg::Failure, msg::Terminate>;

// ---------------------------------------------------------------------------

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

// n contiguous ranges covering [0, total), sizes differing by at most one,
// larger ranges first.
std::vector<IndexRange> partition_candidates(std::size_t total, std::size_t n);

// Best move by (dh, lowest index), independent of report order.
PassOutcome merge_reports(std::span<const msg::Report> reports);

enum class Allocation { even, two_stage };

struct RuntimeOptions {
  Allocation allocation = Allocation::even;
  int explorers = 1;
  int servers = 0;  // two-stage only
  std::chrono::milliseconds reply_timeout{30000};
  // Test hooks: the given worker throws on its first job or request.
  int fail_explorer = -1;
  int fail_server = -1;
};

struct RuntimeStats {
  std::size_t passes = 0;
  double wall_seconds = 0.0;
  std::vector<double> explorer_busy_seconds;
  std::vector<double> server_busy_seconds;

  std::vector<double> explorer_idle_seconds() const;
};

struct Network;

// Manager side of the runtime. Owns explorer and server threads for its
// lifetime; each evaluate() is one pass and a barrier.
class ParallelExecutor final : public Executor {
 public:
  ParallelExecutor(const FrequencyTable& data, int eta, RuntimeOptions options);
  ~ParallelExecutor() override;

  ParallelExecutor(const ParallelExecutor&) = delete;
  ParallelExecutor& operator=(const ParallelExecutor&) = delete;

  const Scheme& scheme() const override { return scheme_; }
  PassOutcome evaluate(const Graph& g, const JunctionForest& forest,
                       std::shared_ptr<const CandidateList> candidates, int eta) override;

  const RuntimeStats& stats() const { return stats_; }
  const RuntimeOptions& options() const { return options_; }

 private:
  Message await_from_workers();
  PassOutcome evaluate_even(const Graph& g, std::shared_ptr<const CandidateList> candidates);
  PassOutcome evaluate_two_stage(const Graph& g, std::shared_ptr<const CandidateList> candidates);
  void shutdown();

  Scheme scheme_;
  int eta_;
  RuntimeOptions options_;
  std::shared_ptr<Network> net_;
  std::vector<std::thread> threads_;
  RuntimeStats stats_;
  bool failed_ = false;
};

// Marginal of the union of `shards`: shards[0..m-1] are held by a pipeline of
// m servers, the last shard by the requesting explorer.
MarginalTable serve_marginal(std::span<const int> subset, const std::vector<FrequencyTable>& shards,
                             std::chrono::milliseconds reply_timeout = std::chrono::milliseconds(30000));

}  // namespace dmn

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "rigid/canonical.hpp"
#include "rigid/oracle.hpp"

namespace rigid {

/// Isomorphism-invariant nonnegative score of a graph.
class Reward {
 public:
  virtual ~Reward() = default;
  virtual std::string name() const = 0;
  virtual std::uint64_t evaluate(const Graph& g) = 0;
  /// Default: evaluate() on each graph in order.
  virtual std::vector<std::uint64_t> evaluate_batch(const std::vector<Graph>& graphs);
};

class NacReward : public Reward {
 public:
  /// `workers` threads evaluate a batch, one graph per task.
  explicit NacReward(int workers = 1) : workers_(workers) {}
  std::string name() const override { return "nac"; }
  std::uint64_t evaluate(const Graph& g) override;
  std::vector<std::uint64_t> evaluate_batch(const std::vector<Graph>& graphs) override;

 private:
  int workers_;
};

class OracleReward : public Reward {
 public:
  OracleReward(std::shared_ptr<OraclePool> pool, OracleInvariant invariant, std::string name);
  std::string name() const override { return name_; }
  std::uint64_t evaluate(const Graph& g) override;
  std::vector<std::uint64_t> evaluate_batch(const std::vector<Graph>& graphs) override;
  const OraclePool& pool() const { return *pool_; }

 private:
  std::shared_ptr<OraclePool> pool_;
  OracleInvariant invariant_;
  std::string name_;
};

/// Memoizes another reward by canonical code. Batches evaluate each missing
/// class once. Safe for concurrent use.
class CachedReward : public Reward {
 public:
  explicit CachedReward(std::shared_ptr<Reward> inner);
  std::string name() const override { return inner_->name(); }
  std::uint64_t evaluate(const Graph& g) override;
  std::vector<std::uint64_t> evaluate_batch(const std::vector<Graph>& graphs) override;

  /// Same as evaluate_batch when the codes are already known.
  std::vector<std::uint64_t> evaluate_coded(const std::vector<Graph>& graphs,
                                            const std::vector<CanonicalCode>& codes);

  std::optional<std::uint64_t> cached(const CanonicalCode& code) const;
  void insert(const CanonicalCode& code, std::uint64_t value);

  /// Distinct classes held, i.e. evaluations of the wrapped reward.
  std::size_t size() const;
  std::uint64_t inner_calls() const { return inner_calls_; }
  /// Cache contents sorted by code.
  std::vector<std::pair<CanonicalCode, std::uint64_t>> entries() const;

 private:
  std::shared_ptr<Reward> inner_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<CanonicalCode, std::uint64_t, CanonicalCodeHash> values_;
  std::atomic<std::uint64_t> inner_calls_{0};
};

/// Counts graphs passed through; used to audit screening budgets.
class CountingReward : public Reward {
 public:
  explicit CountingReward(std::shared_ptr<Reward> inner) : inner_(std::move(inner)) {}
  std::string name() const override { return inner_->name(); }
  std::uint64_t evaluate(const Graph& g) override;
  std::vector<std::uint64_t> evaluate_batch(const std::vector<Graph>& graphs) override;
  std::uint64_t count() const { return count_; }

 private:
  std::shared_ptr<Reward> inner_;
  std::atomic<std::uint64_t> count_{0};
};

struct RewardOptions {
  std::string name;              // nac, plane, sphere, mbezout, oracle:<INVARIANT>
  std::string oracle_command;    // used by oracle-backed rewards
  std::string oracle_table;      // stub table; converted to a command
  std::string stub_binary;       // path of the stub oracle executable
  int oracle_processes = 1;
  int workers = 1;
};

/// Builds the named reward. Oracle rewards require a command or table.
std::shared_ptr<Reward> make_reward(const RewardOptions& opts);

/// Shares one pool between several oracle invariants.
std::shared_ptr<Reward> make_reward(const RewardOptions& opts, std::shared_ptr<OraclePool>& pool);

struct Screening {
  /// Population indices that received a main evaluation, best surrogate first.
  std::vector<std::size_t> selected;
  std::vector<std::uint64_t> values;
  std::size_t surrogate_evaluations = 0;
};

/// Scores the population with `surrogate` and evaluates `main` on the
/// ceil(rho_main * size) highest-scoring members (ties to the smaller
/// canonical code, then the lower index). With rho_main == 1 the surrogate is
/// not consulted and every member is evaluated in index order.
Screening two_stage_select(const std::vector<Graph>& population,
                           const std::vector<CanonicalCode>& codes, Reward* surrogate,
                           Reward& main, double rho_main);

}  // namespace rigid

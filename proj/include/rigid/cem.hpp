#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "rigid/canonical.hpp"
#include "rigid/config.hpp"
#include "rigid/policy.hpp"
#include "rigid/reward.hpp"

namespace rigid {

/// splitmix64-style mixing of a seed with two stream coordinates.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

struct RolloutTrace {
  std::vector<Sample> steps;  // (G_k, a_k) for k = 2..n-1
  Graph graph;
  CanonicalCode code;
  std::optional<std::uint64_t> reward;
};

/// Builds one graph on n vertices from K2 by sampling the policy.
RolloutTrace rollout(const Policy& policy, int n, Rng& rng);

/// Replays a trace's actions from K2.
Graph replay(const std::vector<Extension>& actions);

struct GenerationStats {
  int t = 0;
  std::uint64_t best = 0;
  std::uint64_t cutoff = 0;
  std::size_t new_noniso = 0;
  double eta = 0;
  std::uint64_t evals = 0;   // distinct classes with a main evaluation so far
  double seconds = 0;
  double loss = 0;           // mean training loss of the last epoch
  std::size_t main_evaluations = 0;
  std::size_t surrogate_evaluations = 0;
  std::size_t elites = 0;
  std::size_t survivors = 0;
};

/// True iff the latest generation found fewer than `threshold` new classes.
bool early_stop_check(const std::vector<GenerationStats>& history, int threshold);

struct BestGraph {
  Graph graph;
  CanonicalCode code;
  std::uint64_t value = 0;
  int generation = 0;
};

struct RunResult {
  BestGraph best;
  std::vector<GenerationStats> history;
  int hit_generation = 0;      // first generation reaching the final best value
  std::uint64_t evaluations = 0;
  bool early_stopped = false;
};

/// Deep cross-entropy search over Henneberg constructions.
class CemEngine {
 public:
  /// `config` must be resolved. `surrogate` may be null when rho_main is 1.
  CemEngine(CemConfig config, std::shared_ptr<Reward> main, std::shared_ptr<Reward> surrogate,
            std::unique_ptr<Policy> policy);

  GenerationStats run_generation();
  /// Runs until T generations or early stop. `on_generation` sees each record.
  RunResult run(const std::function<void(const GenerationStats&)>& on_generation = {});

  int generation() const { return t_; }
  const Policy& policy() const { return *policy_; }
  Policy& policy() { return *policy_; }
  const std::vector<RolloutTrace>& survivors() const { return survivors_; }
  const std::vector<RolloutTrace>& last_population() const { return population_; }
  const std::vector<GenerationStats>& history() const { return history_; }
  const std::optional<BestGraph>& best() const { return best_; }
  const CachedReward& cache() const { return *main_; }
  const CemConfig& config() const { return config_; }
  bool stopped() const { return stopped_; }

  /// Writes config.json, generations.csv and best.txt under the output
  /// directory, checkpoints after every generation when enabled, and saves
  /// policy.weights when run() returns.
  void attach_run_directory(const std::string& dir);

  void save_checkpoint(const std::string& dir) const;
  /// Restores the state saved by save_checkpoint into a freshly built engine.
  void restore_checkpoint(const std::string& dir);

 private:
  void record(const GenerationStats& s, bool improved);
  void train(const std::vector<Sample>& data, double eta, GenerationStats& stats);

  CemConfig config_;
  std::shared_ptr<CachedReward> main_;
  std::shared_ptr<CachedReward> surrogate_;
  std::unique_ptr<Policy> policy_;
  int workers_;

  int t_ = 0;
  bool stopped_ = false;
  std::vector<RolloutTrace> survivors_;
  std::vector<RolloutTrace> population_;
  std::unordered_set<CanonicalCode, CanonicalCodeHash> seen_;
  std::optional<BestGraph> best_;
  int hit_generation_ = 0;
  std::vector<GenerationStats> history_;
  std::string run_dir_;
};

/// Builds the rewards, the policy (fresh or from init_weights) and the engine.
struct EngineParts {
  std::shared_ptr<Reward> main;
  std::shared_ptr<Reward> surrogate;
};
EngineParts make_rewards(const CemConfig& config, const std::string& stub_binary);
std::unique_ptr<CemEngine> make_engine(const CemConfig& config, const std::string& stub_binary);

struct DeployResult {
  std::uint64_t best = 0;
  Graph best_graph;
  std::size_t distinct = 0;
  std::uint64_t attempts = 0;
  bool partial = false;  // fewer than `count` distinct graphs within the budget
  std::map<std::uint64_t, std::size_t> histogram;
};

/// Rolls out a frozen policy until `count` distinct classes on n vertices are
/// found (or `attempt_budget` rollouts, default 20 * count), evaluates the
/// reward on each class and reports the best value.
DeployResult deploy_eval(const Policy& policy, int n, Reward& reward, std::size_t count,
                         std::uint64_t seed, int workers = 1, std::uint64_t attempt_budget = 0);

/// Fraction of `rollouts` sampled graphs isomorphic to `target`.
double regeneration_rate(const Policy& policy, const Graph& target, std::size_t rollouts,
                         std::uint64_t seed, int workers = 1);

struct ScheduleCurvePoint {
  std::string schedule;
  std::uint64_t seed = 0;
  GenerationStats stats;
};

/// Runs the search once per (schedule, seed) and returns the per-generation
/// records in that order.
std::vector<ScheduleCurvePoint> schedule_study(const CemConfig& config,
                                               const std::vector<std::string>& schedules,
                                               const std::vector<std::uint64_t>& seeds,
                                               const std::string& stub_binary);
std::string schedule_study_csv(const std::vector<ScheduleCurvePoint>& points);

std::string generations_csv_header();
std::string generations_csv_row(const GenerationStats& s, bool record_time);

}  // namespace rigid

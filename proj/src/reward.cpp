#include "rigid/reward.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "rigid/nac.hpp"
#include "rigid/parallel.hpp"

namespace rigid {

std::vector<std::uint64_t> Reward::evaluate_batch(const std::vector<Graph>& graphs) {
  std::vector<std::uint64_t> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(evaluate(g));
  return out;
}

std::uint64_t NacReward::evaluate(const Graph& g) { return count_nac(g, workers_); }

std::vector<std::uint64_t> NacReward::evaluate_batch(const std::vector<Graph>& graphs) {
  std::vector<std::uint64_t> out(graphs.size());
  parallel_for(graphs.size(), workers_, [&](std::size_t i) { out[i] = count_nac(graphs[i]); });
  return out;
}

OracleReward::OracleReward(std::shared_ptr<OraclePool> pool, OracleInvariant invariant,
                           std::string name)
    : pool_(std::move(pool)), invariant_(invariant), name_(std::move(name)) {}

std::uint64_t OracleReward::evaluate(const Graph& g) { return pool_->query(invariant_, g); }

std::vector<std::uint64_t> OracleReward::evaluate_batch(const std::vector<Graph>& graphs) {
  return pool_->query_batch(invariant_, graphs);
}

CachedReward::CachedReward(std::shared_ptr<Reward> inner) : inner_(std::move(inner)) {}

std::optional<std::uint64_t> CachedReward::cached(const CanonicalCode& code) const {
  std::shared_lock lock(mutex_);
  const auto it = values_.find(code);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void CachedReward::insert(const CanonicalCode& code, std::uint64_t value) {
  std::unique_lock lock(mutex_);
  values_[code] = value;
}

std::uint64_t CachedReward::evaluate(const Graph& g) {
  const CanonicalCode code = canonical_code(g);
  if (auto hit = cached(code)) return *hit;
  const std::uint64_t value = inner_->evaluate(g);
  ++inner_calls_;
  insert(code, value);
  return value;
}

std::vector<std::uint64_t> CachedReward::evaluate_batch(const std::vector<Graph>& graphs) {
  std::vector<CanonicalCode> codes(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) codes[i] = canonical_code(graphs[i]);
  return evaluate_coded(graphs, codes);
}

std::vector<std::uint64_t> CachedReward::evaluate_coded(const std::vector<Graph>& graphs,
                                                        const std::vector<CanonicalCode>& codes) {
  std::vector<std::uint64_t> out(graphs.size());
  std::vector<std::size_t> missing;
  std::unordered_map<CanonicalCode, std::size_t, CanonicalCodeHash> first_of;
  {
    std::shared_lock lock(mutex_);
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      if (const auto it = values_.find(codes[i]); it != values_.end()) {
        out[i] = it->second;
      } else if (first_of.emplace(codes[i], missing.size()).second) {
        missing.push_back(i);
      }
    }
  }
  if (!missing.empty()) {
    std::vector<Graph> todo;
    todo.reserve(missing.size());
    for (std::size_t i : missing) todo.push_back(graphs[i]);
    const auto values = inner_->evaluate_batch(todo);
    inner_calls_ += missing.size();
    std::unique_lock lock(mutex_);
    for (std::size_t j = 0; j < missing.size(); ++j) values_[codes[missing[j]]] = values[j];
  }
  std::shared_lock lock(mutex_);
  for (std::size_t i = 0; i < graphs.size(); ++i) out[i] = values_.at(codes[i]);
  return out;
}

std::size_t CachedReward::size() const {
  std::shared_lock lock(mutex_);
  return values_.size();
}

std::vector<std::pair<CanonicalCode, std::uint64_t>> CachedReward::entries() const {
  std::vector<std::pair<CanonicalCode, std::uint64_t>> out;
  {
    std::shared_lock lock(mutex_);
    out.assign(values_.begin(), values_.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t CountingReward::evaluate(const Graph& g) {
  ++count_;
  return inner_->evaluate(g);
}

std::vector<std::uint64_t> CountingReward::evaluate_batch(const std::vector<Graph>& graphs) {
  count_ += graphs.size();
  return inner_->evaluate_batch(graphs);
}

std::shared_ptr<Reward> make_reward(const RewardOptions& opts, std::shared_ptr<OraclePool>& pool) {
  if (opts.name == "nac") return std::make_shared<NacReward>(opts.workers);
  std::string tag = opts.name;
  if (tag.rfind("oracle:", 0) == 0) tag = tag.substr(7);
  const auto inv = parse_invariant(tag);
  if (!inv) throw UsageError("unknown reward '" + opts.name + "'");
  if (!pool) {
    std::string command = opts.oracle_command;
    if (command.empty() && !opts.oracle_table.empty()) {
      if (opts.stub_binary.empty()) throw UsageError("stub oracle executable not known");
      command = stub_oracle_command(opts.stub_binary, opts.oracle_table);
    }
    if (command.empty()) {
      throw UsageError("reward '" + opts.name + "' needs --oracle or --oracle-table");
    }
    pool = std::make_shared<OraclePool>(command, opts.oracle_processes);
  }
  return std::make_shared<OracleReward>(pool, *inv, opts.name);
}

std::shared_ptr<Reward> make_reward(const RewardOptions& opts) {
  std::shared_ptr<OraclePool> pool;
  return make_reward(opts, pool);
}

Screening two_stage_select(const std::vector<Graph>& population,
                           const std::vector<CanonicalCode>& codes, Reward* surrogate,
                           Reward& main, double rho_main) {
  if (!(rho_main > 0.0 && rho_main <= 1.0)) throw UsageError("rho_main must lie in (0, 1]");
  if (codes.size() != population.size()) throw DomainError("population/code size mismatch");
  Screening out;
  const std::size_t m = population.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::size_t keep = m;
  if (rho_main < 1.0) {
    if (surrogate == nullptr) throw UsageError("rho_main < 1 needs a surrogate reward");
    keep = std::min(m, static_cast<std::size_t>(std::ceil(rho_main * static_cast<double>(m) - 1e-9)));
    std::vector<std::uint64_t> scores;
    if (auto* cached = dynamic_cast<CachedReward*>(surrogate)) {
      scores = cached->evaluate_coded(population, codes);
    } else {
      scores = surrogate->evaluate_batch(population);
    }
    out.surrogate_evaluations = m;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return codes[a] < codes[b];
    });
    order.resize(keep);
  }
  std::vector<Graph> chosen;
  std::vector<CanonicalCode> chosen_codes;
  chosen.reserve(keep);
  for (std::size_t i : order) {
    chosen.push_back(population[i]);
    chosen_codes.push_back(codes[i]);
  }
  if (auto* cached = dynamic_cast<CachedReward*>(&main)) {
    out.values = cached->evaluate_coded(chosen, chosen_codes);
  } else {
    out.values = main.evaluate_batch(chosen);
  }
  out.selected = std::move(order);
  return out;
}

}  // namespace rigid

#include "rigid/cem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rigid/parallel.hpp"
#include "rigid/rigidity.hpp"

namespace rigid {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

RolloutTrace rollout(const Policy& policy, int n, Rng& rng) {
  if (n < 3) throw DomainError("rollout needs n >= 3");
  if (n > policy.n_max()) {
    throw DomainError("policy covers at most " + std::to_string(policy.n_max()) +
                      " vertices; extend it first");
  }
  RolloutTrace trace;
  Graph g = Graph::complete(2);
  trace.steps.reserve(static_cast<std::size_t>(n - 2));
  for (int k = 2; k < n; ++k) {
    const ActionDistribution dist = policy.distribution(g);
    const Extension a = sample_action(dist, rng);
    Graph next = apply_extension(g, a);
    trace.steps.push_back({std::move(g), a});
    g = std::move(next);
  }
  trace.code = canonical_code(g);
  trace.graph = std::move(g);
  return trace;
}

Graph replay(const std::vector<Extension>& actions) {
  Graph g = Graph::complete(2);
  for (const auto& a : actions) g = apply_extension(g, a);
  return g;
}

bool early_stop_check(const std::vector<GenerationStats>& history, int threshold) {
  if (history.empty()) throw DomainError("early stop needs a completed generation");
  return history.back().new_noniso < static_cast<std::size_t>(std::max(threshold, 0));
}

namespace {

std::size_t fraction_count(int m, double rho) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(m) * rho + 1e-9));
}

CanonicalCode code_from_text(int n, const std::string& text) {
  return CanonicalCode{n, packed_code(decode_int(parse_bigint(text), n))};
}

nlohmann::json stats_json(const GenerationStats& s) {
  return {{"t", s.t},
          {"best", s.best},
          {"cutoff", s.cutoff},
          {"new_noniso", s.new_noniso},
          {"eta", s.eta},
          {"evals", s.evals},
          {"seconds", s.seconds},
          {"loss", s.loss},
          {"main_evaluations", s.main_evaluations},
          {"surrogate_evaluations", s.surrogate_evaluations},
          {"elites", s.elites},
          {"survivors", s.survivors}};
}

GenerationStats stats_from_json(const nlohmann::json& j) {
  GenerationStats s;
  s.t = j.at("t").get<int>();
  s.best = j.at("best").get<std::uint64_t>();
  s.cutoff = j.at("cutoff").get<std::uint64_t>();
  s.new_noniso = j.at("new_noniso").get<std::size_t>();
  s.eta = j.at("eta").get<double>();
  s.evals = j.at("evals").get<std::uint64_t>();
  s.seconds = j.at("seconds").get<double>();
  s.loss = j.at("loss").get<double>();
  s.main_evaluations = j.at("main_evaluations").get<std::size_t>();
  s.surrogate_evaluations = j.at("surrogate_evaluations").get<std::size_t>();
  s.elites = j.at("elites").get<std::size_t>();
  s.survivors = j.at("survivors").get<std::size_t>();
  return s;
}

nlohmann::json actions_json(const RolloutTrace& r) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : r.steps) {
    out.push_back({s.action.apex ? *s.action.apex : -1, s.action.v, s.action.w});
  }
  return out;
}

std::string best_line(const BestGraph& b) {
  return std::to_string(b.graph.order()) + " " + to_string(encode_int(b.graph)) + " " +
         std::to_string(b.value) + " " + std::to_string(b.generation);
}

}  // namespace

std::string generations_csv_header() { return "t,best,cutoff,new_noniso,eta_t,evals,seconds\n"; }

std::string generations_csv_row(const GenerationStats& s, bool record_time) {
  char eta[64];
  std::snprintf(eta, sizeof eta, "%.9g", s.eta);
  char secs[64];
  std::snprintf(secs, sizeof secs, "%.3f", record_time ? s.seconds : 0.0);
  std::ostringstream out;
  out << s.t << ',' << s.best << ',' << s.cutoff << ',' << s.new_noniso << ',' << eta << ','
      << s.evals << ',' << secs << '\n';
  return out.str();
}

CemEngine::CemEngine(CemConfig config, std::shared_ptr<Reward> main,
                     std::shared_ptr<Reward> surrogate, std::unique_ptr<Policy> policy)
    : config_(std::move(config)),
      main_(std::make_shared<CachedReward>(std::move(main))),
      policy_(std::move(policy)),
      workers_(config_.workers > 0 ? config_.workers : default_workers()) {
  config_.validate();
  if (!config_.generations || !config_.rho_main || !config_.early_stop || !config_.eta0) {
    throw UsageError("engine needs a resolved configuration");
  }
  if (*config_.rho_main < 1.0) {
    if (!surrogate) throw UsageError("rho_main < 1 needs a surrogate reward");
    surrogate_ = std::make_shared<CachedReward>(std::move(surrogate));
  }
  if (config_.n > policy_->n_max()) {
    throw UsageError("policy covers " + std::to_string(policy_->n_max()) +
                     " vertices, search needs " + std::to_string(config_.n));
  }
}

void CemEngine::train(const std::vector<Sample>& data, double eta, GenerationStats& stats) {
  if (data.empty() || config_.epochs == 0) return;
  Rng rng(derive_seed(config_.seed, static_cast<std::uint64_t>(t_), 0x7261696eULL));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const AdamConfig adam{config_.lr};
  const std::size_t batch = static_cast<std::size_t>(config_.batch_size);
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<Sample> chunk;
      chunk.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) chunk.push_back(data[order[i]]);
      const LossResult r = policy_->loss_and_gradients(chunk, eta);
      policy_->adam_step(r.grads, adam);
      total += r.loss * static_cast<double>(end - start);
    }
    stats.loss = total / static_cast<double>(order.size());
  }
}

GenerationStats CemEngine::run_generation() {
  const auto start = std::chrono::steady_clock::now();
  ++t_;
  GenerationStats stats;
  stats.t = t_;
  const int m = config_.m;
  const int n = config_.n;

  population_ = survivors_;
  const std::size_t kept = population_.size();
  const std::size_t fill = static_cast<std::size_t>(m) - kept;
  std::vector<RolloutTrace> fresh(fill);
  const Policy& snapshot = *policy_;
  parallel_for(fill, workers_, [&](std::size_t i) {
    Rng rng(derive_seed(config_.seed, static_cast<std::uint64_t>(t_), kept + i));
    fresh[i] = rollout(snapshot, n, rng);
    if (config_.debug_checks && !is_minimally_rigid(fresh[i].graph)) {
      throw DomainError("rollout produced a graph that is not minimally rigid");
    }
  });
  for (auto& r : fresh) population_.push_back(std::move(r));

  std::vector<Graph> graphs;
  std::vector<CanonicalCode> codes;
  graphs.reserve(population_.size());
  codes.reserve(population_.size());
  for (const auto& r : population_) {
    graphs.push_back(r.graph);
    codes.push_back(r.code);
    if (seen_.insert(r.code).second) ++stats.new_noniso;
  }

  const Screening screen =
      two_stage_select(graphs, codes, surrogate_.get(), *main_, *config_.rho_main);
  stats.main_evaluations = screen.selected.size();
  stats.surrogate_evaluations = screen.surrogate_evaluations;
  std::vector<char> evaluated(population_.size(), 0);
  for (std::size_t j = 0; j < screen.selected.size(); ++j) {
    population_[screen.selected[j]].reward = screen.values[j];
    evaluated[screen.selected[j]] = 1;
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < population_.size(); ++i) {
    if (evaluated[i] || (i < kept && population_[i].reward)) pool.push_back(i);
  }
  std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = *population_[a].reward;
    const auto rb = *population_[b].reward;
    if (ra != rb) return ra > rb;
    if (population_[a].code != population_[b].code) return population_[a].code < population_[b].code;
    return a < b;
  });

  const std::size_t n_elite = std::min(pool.size(), std::max<std::size_t>(1, fraction_count(m, config_.rho_elite)));
  const std::size_t n_surv = std::min(pool.size(), std::max<std::size_t>(1, fraction_count(m, config_.rho_surv)));
  stats.elites = n_elite;
  stats.survivors = n_surv;

  bool improved = false;
  if (!pool.empty()) {
    const RolloutTrace& top = population_[pool.front()];
    if (!best_ || *top.reward > best_->value ||
        (*top.reward == best_->value && top.code < best_->code)) {
      improved = !best_ || *top.reward > best_->value;
      if (improved) hit_generation_ = t_;
      best_ = BestGraph{top.graph, top.code, *top.reward, t_};
    }
    stats.cutoff = *population_[pool[n_elite - 1]].reward;
  }
  stats.best = best_ ? best_->value : 0;

  std::vector<Sample> data;
  for (std::size_t e = 0; e < n_elite; ++e) {
    const auto& steps = population_[pool[e]].steps;
    data.insert(data.end(), steps.begin(), steps.end());
  }
  stats.eta = config_.entropy_schedule().at(t_);
  train(data, stats.eta, stats);

  survivors_.clear();
  for (std::size_t s = 0; s < n_surv; ++s) survivors_.push_back(population_[pool[s]]);

  stats.evals = main_->size();
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  history_.push_back(stats);
  if (early_stop_check(history_, *config_.early_stop)) stopped_ = true;
  if (t_ >= *config_.generations) stopped_ = true;
  record(stats, improved);
  return stats;
}

RunResult CemEngine::run(const std::function<void(const GenerationStats&)>& on_generation) {
  while (!stopped_) {
    const GenerationStats s = run_generation();
    if (on_generation) on_generation(s);
  }
  if (!run_dir_.empty()) policy_->save((fs::path(run_dir_) / "policy.weights").string());
  RunResult result;
  if (best_) result.best = *best_;
  result.history = history_;
  result.hit_generation = hit_generation_;
  result.evaluations = main_->size();
  result.early_stopped = !history_.empty() && t_ < *config_.generations;
  return result;
}

// ---------------------------------------------------------------------------
// Run directory and checkpoints

void CemEngine::attach_run_directory(const std::string& dir) {
  run_dir_ = dir;
  fs::create_directories(dir);
  std::ofstream(fs::path(dir) / "config.json") << config_.to_json().dump(2) << '\n';
  std::vector<std::string> kept;
  if (t_ > 0) {
    // Resumed: drop log lines written after the checkpoint.
    std::ifstream old(fs::path(dir) / "best.txt");
    std::string line;
    while (std::getline(old, line)) {
      std::istringstream fields(line);
      int n = 0;
      std::string code;
      std::uint64_t value = 0;
      int gen = 0;
      if (fields >> n >> code >> value >> gen && gen <= t_) kept.push_back(line);
    }
  }
  std::ofstream csv(fs::path(dir) / "generations.csv");
  csv << generations_csv_header();
  for (const auto& s : history_) csv << generations_csv_row(s, config_.record_time);
  std::ofstream best(fs::path(dir) / "best.txt");
  for (const auto& l : kept) best << l << '\n';
}

void CemEngine::record(const GenerationStats& s, bool improved) {
  if (run_dir_.empty()) return;
  if (config_.checkpoint) save_checkpoint(run_dir_);
  std::ofstream(fs::path(run_dir_) / "generations.csv", std::ios::app)
      << generations_csv_row(s, config_.record_time);
  if (improved && best_) {
    std::ofstream(fs::path(run_dir_) / "best.txt", std::ios::app) << best_line(*best_) << '\n';
  }
}

void CemEngine::save_checkpoint(const std::string& dir) const {
  fs::create_directories(dir);
  nlohmann::json j;
  j["t"] = t_;
  j["hit_generation"] = hit_generation_;
  if (best_) {
    j["best"] = {{"n", best_->graph.order()},
                 {"code", to_string(encode_int(best_->graph))},
                 {"value", best_->value},
                 {"generation", best_->generation}};
  }
  nlohmann::json survivors = nlohmann::json::array();
  for (const auto& s : survivors_) {
    survivors.push_back({{"actions", actions_json(s)}, {"reward", s.reward.value_or(0)}});
  }
  j["survivors"] = std::move(survivors);
  std::vector<CanonicalCode> seen(seen_.begin(), seen_.end());
  std::sort(seen.begin(), seen.end());
  nlohmann::json seen_json = nlohmann::json::array();
  for (const auto& c : seen) seen_json.push_back(to_string(c.value()));
  j["seen"] = std::move(seen_json);
  auto cache_json = [](const CachedReward& cache) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [code, value] : cache.entries()) out.push_back({to_string(code.value()), value});
    return out;
  };
  j["cache"] = cache_json(*main_);
  if (surrogate_) j["surrogate_cache"] = cache_json(*surrogate_);
  nlohmann::json history = nlohmann::json::array();
  for (const auto& s : history_) history.push_back(stats_json(s));
  j["history"] = std::move(history);

  const std::string stem = "checkpoint-" + std::to_string(t_);
  const fs::path weights = fs::path(dir) / (stem + ".weights");
  const fs::path state = fs::path(dir) / (stem + ".json");
  policy_->save((weights.string() + ".tmp"));
  std::ofstream(state.string() + ".tmp") << j.dump() << '\n';
  fs::rename(weights.string() + ".tmp", weights);
  fs::rename(state.string() + ".tmp", state);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("checkpoint-", 0) == 0 && name.rfind(stem + ".", 0) != 0) {
      fs::remove(entry.path());
    }
  }
}

void CemEngine::restore_checkpoint(const std::string& dir) {
  int latest = -1;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("checkpoint-", 0) == 0 && entry.path().extension() == ".json") {
      latest = std::max(latest, std::stoi(name.substr(11)));
    }
  }
  if (latest < 0) throw UsageError("no checkpoint in '" + dir + "'");
  const std::string stem = "checkpoint-" + std::to_string(latest);
  std::ifstream in(fs::path(dir) / (stem + ".json"));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("checkpoint '" + stem + "' is unreadable: " + e.what());
  }
  auto loaded = load_policy((fs::path(dir) / (stem + ".weights")).string(), policy_->n_max());
  if (loaded->kind() != policy_->kind()) throw UsageError("checkpoint policy kind differs");
  policy_ = std::move(loaded);

  const int n = config_.n;
  t_ = j.at("t").get<int>();
  hit_generation_ = j.at("hit_generation").get<int>();
  best_.reset();
  if (j.contains("best")) {
    const auto& b = j.at("best");
    Graph g = decode_int(parse_bigint(b.at("code").get<std::string>()), b.at("n").get<int>());
    const CanonicalCode code = canonical_code(g);
    best_ = BestGraph{std::move(g), code, b.at("value").get<std::uint64_t>(),
                      b.at("generation").get<int>()};
  }
  survivors_.clear();
  for (const auto& s : j.at("survivors")) {
    RolloutTrace r;
    Graph g = Graph::complete(2);
    for (const auto& a : s.at("actions")) {
      const int apex = a.at(0).get<int>();
      const Extension e = apex < 0 ? Extension::zero(a.at(1).get<int>(), a.at(2).get<int>())
                                   : Extension::one(apex, a.at(1).get<int>(), a.at(2).get<int>());
      Graph next = apply_extension(g, e);
      r.steps.push_back({std::move(g), e});
      g = std::move(next);
    }
    r.code = canonical_code(g);
    r.graph = std::move(g);
    r.reward = s.at("reward").get<std::uint64_t>();
    survivors_.push_back(std::move(r));
  }
  seen_.clear();
  for (const auto& c : j.at("seen")) seen_.insert(code_from_text(n, c.get<std::string>()));
  for (const auto& e : j.at("cache")) {
    main_->insert(code_from_text(n, e.at(0).get<std::string>()), e.at(1).get<std::uint64_t>());
  }
  if (surrogate_ && j.contains("surrogate_cache")) {
    for (const auto& e : j.at("surrogate_cache")) {
      surrogate_->insert(code_from_text(n, e.at(0).get<std::string>()),
                         e.at(1).get<std::uint64_t>());
    }
  }
  history_.clear();
  for (const auto& s : j.at("history")) history_.push_back(stats_from_json(s));

  stopped_ = t_ >= *config_.generations ||
             (!history_.empty() && early_stop_check(history_, *config_.early_stop));
  if (!run_dir_.empty()) attach_run_directory(run_dir_);
}

// ---------------------------------------------------------------------------
// Assembly

EngineParts make_rewards(const CemConfig& config, const std::string& stub_binary) {
  RewardOptions opts;
  opts.name = config.reward;
  opts.oracle_command = config.oracle;
  opts.oracle_table = config.oracle_table;
  opts.stub_binary = stub_binary;
  opts.oracle_processes = config.oracle_processes;
  opts.workers = config.workers > 0 ? config.workers : default_workers();
  std::shared_ptr<OraclePool> pool;
  EngineParts parts;
  parts.main = make_reward(opts, pool);
  if (config.rho_main.value_or(1.0) < 1.0) {
    opts.name = config.surrogate;
    parts.surrogate = make_reward(opts, pool);
  }
  return parts;
}

std::unique_ptr<CemEngine> make_engine(const CemConfig& raw, const std::string& stub_binary) {
  const CemConfig config = raw.resolved();
  EngineParts parts = make_rewards(config, stub_binary);
  std::unique_ptr<Policy> policy;
  const PolicyKind kind = parse_policy_kind(config.policy);
  if (!config.init_weights.empty()) {
    policy = load_policy(config.init_weights);
    if (policy->kind() != config.policy) {
      throw UsageError("init weights hold a " + policy->kind() + " policy, config asks for " +
                       config.policy);
    }
    if (policy->n_max() < config.n) policy = extend_to_n(*policy, config.n);
  } else {
    policy = make_policy(kind, config.n, derive_seed(config.seed, 0, 0x706f6c6963790000ULL));
  }
  auto engine = std::make_unique<CemEngine>(config, parts.main, parts.surrogate, std::move(policy));
  if (!config.output_dir.empty()) engine->attach_run_directory(config.output_dir);
  return engine;
}

// ---------------------------------------------------------------------------
// Deployment

DeployResult deploy_eval(const Policy& policy, int n, Reward& reward, std::size_t count,
                         std::uint64_t seed, int workers, std::uint64_t attempt_budget) {
  if (count == 0) throw UsageError("deploy count must be positive");
  if (attempt_budget == 0) attempt_budget = 20 * static_cast<std::uint64_t>(count);
  DeployResult out;
  std::unordered_set<CanonicalCode, CanonicalCodeHash> seen;
  std::vector<Graph> distinct;
  constexpr std::uint64_t kBatch = 256;
  const int w = workers > 0 ? workers : default_workers();
  while (distinct.size() < count && out.attempts < attempt_budget) {
    const std::uint64_t size = std::min(kBatch, attempt_budget - out.attempts);
    std::vector<RolloutTrace> batch(size);
    const std::uint64_t base = out.attempts;
    parallel_for(size, w, [&](std::size_t i) {
      Rng rng(derive_seed(seed, 0x6465706c6f79ULL, base + i));
      batch[i] = rollout(policy, n, rng);
    });
    for (auto& r : batch) {
      ++out.attempts;
      if (seen.insert(r.code).second) distinct.push_back(std::move(r.graph));
      if (distinct.size() == count) break;
    }
  }
  out.distinct = distinct.size();
  out.partial = distinct.size() < count;
  const auto values = reward.evaluate_batch(distinct);
  for (std::size_t i = 0; i < values.size(); ++i) {
    ++out.histogram[values[i]];
    if (i == 0 || values[i] > out.best) {
      out.best = values[i];
      out.best_graph = distinct[i];
    }
  }
  return out;
}

double regeneration_rate(const Policy& policy, const Graph& target, std::size_t rollouts,
                         std::uint64_t seed, int workers) {
  if (rollouts == 0) return 0;
  const CanonicalCode want = canonical_code(target);
  std::vector<char> hit(rollouts, 0);
  parallel_for(rollouts, workers > 0 ? workers : default_workers(), [&](std::size_t i) {
    Rng rng(derive_seed(seed, 0x7265676eULL, i));
    hit[i] = rollout(policy, target.order(), rng).code == want ? 1 : 0;
  });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) /
         static_cast<double>(rollouts);
}

// ---------------------------------------------------------------------------
// Schedule study

std::vector<ScheduleCurvePoint> schedule_study(const CemConfig& config,
                                               const std::vector<std::string>& schedules,
                                               const std::vector<std::uint64_t>& seeds,
                                               const std::string& stub_binary) {
  std::vector<ScheduleCurvePoint> out;
  for (const auto& schedule : schedules) {
    for (const auto seed : seeds) {
      CemConfig c = config;
      c.schedule = schedule;
      c.seed = seed;
      c.output_dir.clear();
      auto engine = make_engine(c, stub_binary);
      const RunResult r = engine->run();
      for (const auto& s : r.history) out.push_back({schedule, seed, s});
    }
  }
  return out;
}

std::string schedule_study_csv(const std::vector<ScheduleCurvePoint>& points) {
  std::ostringstream out;
  out << "schedule,seed,t,best,eta_t,loss\n";
  for (const auto& p : points) {
    char eta[64];
    char loss[64];
    std::snprintf(eta, sizeof eta, "%.9g", p.stats.eta);
    std::snprintf(loss, sizeof loss, "%.12g", p.stats.loss);
    out << p.schedule << ',' << p.seed << ',' << p.stats.t << ',' << p.stats.best << ',' << eta
        << ',' << loss << '\n';
  }
  return out.str();
}

}  // namespace rigid

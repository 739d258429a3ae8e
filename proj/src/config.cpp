#include "rigid/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rigid/graph.hpp"

namespace rigid {

double entropy_coefficient(int t, double eta0, double alpha, double beta) {
  if (t < 1) throw DomainError("entropy schedule starts at generation 1");
  return eta0 / (1.0 + alpha * std::log1p(static_cast<double>(t) * std::exp(-beta)));
}

double EntropySchedule::at(int t) const {
  switch (kind) {
    case Kind::Decay:
      return entropy_coefficient(t, eta0, alpha, beta);
    case Kind::Constant:
      return eta0;
    case Kind::None:
      return 0.0;
  }
  return 0.0;
}

std::string EntropySchedule::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Decay:
      out << "decay:" << eta0 << ':' << alpha << ':' << beta;
      break;
    case Kind::Constant:
      out << "constant:" << eta0;
      break;
    case Kind::None:
      out << "none";
      break;
  }
  return out.str();
}

EntropySchedule parse_schedule(const std::string& text, const EntropySchedule& fallback) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ':')) parts.push_back(part);
  if (parts.empty()) throw UsageError("empty schedule");
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("bad number '" + s + "' in schedule '" + text + "'");
    }
  };
  EntropySchedule s = fallback;
  if (parts[0] == "none" && parts.size() == 1) {
    s.kind = EntropySchedule::Kind::None;
    s.eta0 = 0;
    return s;
  }
  if (parts[0] == "constant" && parts.size() <= 2) {
    s.kind = EntropySchedule::Kind::Constant;
    if (parts.size() == 2) s.eta0 = number(parts[1]);
    return s;
  }
  const bool decay = parts[0] == "decay" || parts[0] == "eq5";
  if (decay && (parts.size() == 1 || parts.size() == 2 || parts.size() == 4)) {
    s.kind = EntropySchedule::Kind::Decay;
    if (parts.size() >= 2) s.eta0 = number(parts[1]);
    if (parts.size() == 4) {
      s.alpha = number(parts[2]);
      s.beta = number(parts[3]);
    }
    return s;
  }
  throw UsageError("unknown schedule '" + text +
                   "' (expected decay[:ETA0[:ALPHA:BETA]], constant[:ETA] or none)");
}

double default_eta0(const std::string& reward, int n) {
  (void)n;
  if (reward == "nac") return 0.05;
  return 0.05;
}

CemConfig CemConfig::resolved() const {
  CemConfig c = *this;
  const bool nac = c.reward == "nac";
  if (!c.generations) c.generations = nac ? 500 : 250;
  if (!c.rho_main) c.rho_main = nac ? 1.0 : 0.256;
  if (!c.early_stop) c.early_stop = nac ? 250 : 500;
  if (!c.eta0) c.eta0 = default_eta0(c.reward, c.n);
  c.validate();
  return c;
}

void CemConfig::validate() const {
  auto fail = [](const std::string& msg) { throw UsageError("config: " + msg); };
  if (n < 3) fail("n must be at least 3");
  if (n > Graph::kMaxVertices) fail("n exceeds " + std::to_string(Graph::kMaxVertices));
  if (m < 1) fail("m must be positive");
  if (generations && *generations < 1) fail("generations must be positive");
  if (!(rho_surv > 0 && rho_surv <= rho_elite && rho_elite <= 1)) {
    fail("need 0 < rho_surv <= rho_elite <= 1");
  }
  if (rho_main && !(*rho_main > 0 && *rho_main <= 1)) fail("need 0 < rho_main <= 1");
  if (eta0 && *eta0 < 0) fail("eta0 must be nonnegative");
  if (epochs < 0) fail("epochs must be nonnegative");
  if (!(lr > 0)) fail("lr must be positive");
  if (batch_size < 1) fail("batch_size must be positive");
  if (early_stop && *early_stop < 0) fail("early_stop must be nonnegative");
  if (oracle_processes < 1) fail("oracle_processes must be positive");
  if (workers < 0) fail("workers must be nonnegative");
  if (policy != "gin" && policy != "flat-mlp") fail("policy must be gin or flat-mlp");
  parse_schedule(schedule, EntropySchedule{});
}

EntropySchedule CemConfig::entropy_schedule() const {
  EntropySchedule base;
  base.eta0 = eta0.value_or(default_eta0(reward, n));
  base.alpha = alpha;
  base.beta = beta;
  return parse_schedule(schedule, base);
}

nlohmann::json CemConfig::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["m"] = m;
  if (generations) j["generations"] = *generations;
  j["rho_elite"] = rho_elite;
  j["rho_surv"] = rho_surv;
  if (rho_main) j["rho_main"] = *rho_main;
  if (eta0) j["eta0"] = *eta0;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["schedule"] = schedule;
  j["epochs"] = epochs;
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  if (early_stop) j["early_stop"] = *early_stop;
  j["seed"] = seed;
  j["reward"] = reward;
  j["surrogate"] = surrogate;
  j["oracle"] = oracle;
  j["oracle_table"] = oracle_table;
  j["oracle_processes"] = oracle_processes;
  j["policy"] = policy;
  j["init_weights"] = init_weights;
  j["output_dir"] = output_dir;
  j["workers"] = workers;
  j["record_time"] = record_time;
  j["checkpoint"] = checkpoint;
  j["debug_checks"] = debug_checks;
  return j;
}

CemConfig CemConfig::from_json(const nlohmann::json& j, CemConfig c) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "n") c.n = value.get<int>();
      else if (key == "m") c.m = value.get<int>();
      else if (key == "generations") c.generations = value.get<int>();
      else if (key == "rho_elite") c.rho_elite = value.get<double>();
      else if (key == "rho_surv") c.rho_surv = value.get<double>();
      else if (key == "rho_main") c.rho_main = value.get<double>();
      else if (key == "eta0") c.eta0 = value.get<double>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "beta") c.beta = value.get<double>();
      else if (key == "schedule") c.schedule = value.get<std::string>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "early_stop") c.early_stop = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "reward") c.reward = value.get<std::string>();
      else if (key == "surrogate") c.surrogate = value.get<std::string>();
      else if (key == "oracle") c.oracle = value.get<std::string>();
      else if (key == "oracle_table") c.oracle_table = value.get<std::string>();
      else if (key == "oracle_processes") c.oracle_processes = value.get<int>();
      else if (key == "policy") c.policy = value.get<std::string>();
      else if (key == "init_weights") c.init_weights = value.get<std::string>();
      else if (key == "output_dir") c.output_dir = value.get<std::string>();
      else if (key == "workers") c.workers = value.get<int>();
      else if (key == "record_time") c.record_time = value.get<bool>();
      else if (key == "checkpoint") c.checkpoint = value.get<bool>();
      else if (key == "debug_checks") c.debug_checks = value.get<bool>();
      else throw UsageError("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw UsageError("config: key '" + key + "' has the wrong type");
    }
  }
  return c;
}

CemConfig CemConfig::load(const std::string& path, CemConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j, std::move(base));
}

CemConfig CemConfig::from_json(const nlohmann::json& j) { return from_json(j, CemConfig{}); }

CemConfig CemConfig::load(const std::string& path) { return load(path, CemConfig{}); }

}  // namespace rigid

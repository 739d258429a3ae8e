#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace rigid {

/// How eta_t evolves over generations.
struct EntropySchedule {
  enum class Kind { Decay, Constant, None };
  Kind kind = Kind::Decay;
  double eta0 = 0;
  double alpha = 6;
  double beta = 7;

  double at(int t) const;
  std::string describe() const;
};

/// eta0 / (1 + alpha * ln(1 + t * exp(-beta))).
double entropy_coefficient(int t, double eta0, double alpha, double beta);

/// Parses "decay", "decay:ETA0[:ALPHA:BETA]", "constant:ETA" or "none". Missing
/// decay values come from `fallback`.
EntropySchedule parse_schedule(const std::string& text, const EntropySchedule& fallback);

/// Search configuration. Unset optional values take reward-dependent
/// defaults in resolve().
struct CemConfig {
  int n = 10;
  int m = 1000;
  std::optional<int> generations;          // 500 for nac, else 250
  double rho_elite = 0.064;
  double rho_surv = 0.016;
  std::optional<double> rho_main;          // 1 for nac, else 0.256
  std::optional<double> eta0;              // per-reward calibrated default
  double alpha = 6;
  double beta = 7;
  std::string schedule = "decay";
  int epochs = 4;
  double lr = 5e-4;
  int batch_size = 32;
  std::optional<int> early_stop;           // 250 for nac, else 500
  std::uint64_t seed = 0;
  std::string reward = "nac";
  std::string surrogate = "mbezout";
  std::string oracle;
  std::string oracle_table;
  int oracle_processes = 1;
  std::string policy = "gin";
  std::string init_weights;
  std::string output_dir;
  int workers = 0;
  bool record_time = true;
  bool checkpoint = true;
  bool debug_checks = false;

  /// Fills reward-dependent defaults and checks ranges (UsageError).
  CemConfig resolved() const;
  void validate() const;

  int T() const { return generations.value_or(0); }
  EntropySchedule entropy_schedule() const;

  nlohmann::json to_json() const;
  /// Rejects unknown keys and ill-typed values with UsageError.
  static CemConfig from_json(const nlohmann::json& j, CemConfig base);
  static CemConfig from_json(const nlohmann::json& j);
  static CemConfig load(const std::string& path, CemConfig base);
  static CemConfig load(const std::string& path);
};

/// Default eta0 when the configuration leaves it unset.
double default_eta0(const std::string& reward, int n);

}  // namespace rigid

// rigid: search, verification and enumeration driver.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rigid/canonical.hpp"
#include "rigid/cem.hpp"
#include "rigid/config.hpp"
#include "rigid/nac.hpp"
#include "rigid/oracle.hpp"
#include "rigid/parallel.hpp"
#include "rigid/reward.hpp"
#include "rigid/rigidity.hpp"
#include "rigid/structure.hpp"

namespace fs = std::filesystem;
using namespace rigid;

namespace {

std::string stub_binary_path() {
  if (const char* env = std::getenv("RIGID_STUB_ORACLE"); env != nullptr && *env != '\0') {
    return env;
  }
  std::error_code ec;
  const fs::path self = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return "rigid-stub-oracle";
  return (self.parent_path() / "rigid-stub-oracle").string();
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain:
      return 1;
    case ErrorKind::Usage:
      return 2;
    case ErrorKind::Oracle:
      return 3;
  }
  return 1;
}

Graph read_graph(const std::string& code_text, int n) {
  const BigInt code = parse_bigint(code_text);
  if (n <= 0) {
    if (code == 0) throw UsageError("the code 0 needs an explicit --n");
    n = infer_n(code);
  }
  return decode_int(code, n);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, sep)) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::string yes(bool b) { return b ? "true" : "false"; }

struct OracleFlags {
  std::string command;
  std::string table;
  int processes = 1;

  void add(CLI::App* app) {
    app->add_option("--oracle", command, "shell command of an invariant oracle");
    app->add_option("--oracle-table", table, "answer oracle queries from this stub table");
    app->add_option("--oracle-processes", processes, "oracle processes in the pool")
        ->check(CLI::PositiveNumber);
  }
  bool configured() const { return !command.empty() || !table.empty(); }
  RewardOptions opts(const std::string& name, int workers) const {
    RewardOptions s;
    s.name = name;
    s.oracle_command = command;
    s.oracle_table = table;
    s.stub_binary = stub_binary_path();
    s.oracle_processes = processes;
    s.workers = workers;
    return s;
  }
};

Graph named_core(const std::string& name) {
  if (name == "k33" || name == "K33" || name == "K3,3") {
    Graph g(6);
    for (int a = 0; a < 3; ++a) {
      for (int b = 3; b < 6; ++b) g.add_edge(a, b);
    }
    return g;
  }
  if (name.size() > 1 && (name[0] == 'K' || name[0] == 'k') &&
      name.find_first_not_of("0123456789", 1) == std::string::npos) {
    return Graph::complete(std::stoi(name.substr(1)));
  }
  // n:code
  const auto parts = split(name, ':');
  if (parts.size() == 2) return decode_int(parse_bigint(parts[1]), std::stoi(parts[0]));
  throw UsageError("unknown core '" + name + "' (use k33, K<n> or <n>:<code>)");
}

// --- search -----------------------------------------------------------------

struct SearchFlags {
  std::string config_path;
  std::string resume;
  bool quiet = false;
  bool no_time = false;
  OracleFlags oracle;
  CemConfig values;
  std::optional<int> workers_flag;
  CLI::App* app = nullptr;
};

void add_search_options(CLI::App* sub, SearchFlags& f) {
  f.app = sub;
  sub->add_option("--config", f.config_path, "JSON configuration file");
  sub->add_option("--resume", f.resume, "continue the run stored in this directory");
  sub->add_option("--n", f.values.n, "target vertex count");
  sub->add_option("--m", f.values.m, "population size");
  sub->add_option("--generations", f.values.generations, "generation limit T");
  sub->add_option("--rho-elite", f.values.rho_elite);
  sub->add_option("--rho-surv", f.values.rho_surv);
  sub->add_option("--rho-main", f.values.rho_main);
  sub->add_option("--eta0", f.values.eta0);
  sub->add_option("--alpha", f.values.alpha);
  sub->add_option("--beta", f.values.beta);
  sub->add_option("--schedule", f.values.schedule, "decay[:ETA0[:ALPHA:BETA]], constant[:ETA] or none");
  sub->add_option("--epochs", f.values.epochs);
  sub->add_option("--lr", f.values.lr);
  sub->add_option("--batch-size", f.values.batch_size);
  sub->add_option("--early-stop", f.values.early_stop, "new-class threshold; 0 disables");
  sub->add_option("--seed", f.values.seed);
  sub->add_option("--reward", f.values.reward, "nac, plane, sphere, mbezout or oracle:<INVARIANT>");
  sub->add_option("--surrogate", f.values.surrogate);
  sub->add_option("--policy", f.values.policy, "gin or flat-mlp");
  sub->add_option("--init-weights", f.values.init_weights);
  sub->add_option("--out", f.values.output_dir, "run directory");
  sub->add_flag("--no-time", f.no_time, "write 0 in the seconds column");
  sub->add_flag("--debug-checks", f.values.debug_checks, "verify minimal rigidity of every rollout");
  sub->add_flag("--quiet", f.quiet);
  f.oracle.add(sub);
}

// Flags given on the command line override the file.
CemConfig merge_search_config(const SearchFlags& f) {
  CemConfig c;
  if (!f.config_path.empty()) c = CemConfig::load(f.config_path);
  auto given = [&](const char* name) { return f.app->count(name) > 0; };
  const CemConfig& v = f.values;
  if (given("--n")) c.n = v.n;
  if (given("--m")) c.m = v.m;
  if (given("--generations")) c.generations = v.generations;
  if (given("--rho-elite")) c.rho_elite = v.rho_elite;
  if (given("--rho-surv")) c.rho_surv = v.rho_surv;
  if (given("--rho-main")) c.rho_main = v.rho_main;
  if (given("--eta0")) c.eta0 = v.eta0;
  if (given("--alpha")) c.alpha = v.alpha;
  if (given("--beta")) c.beta = v.beta;
  if (given("--schedule")) c.schedule = v.schedule;
  if (given("--epochs")) c.epochs = v.epochs;
  if (given("--lr")) c.lr = v.lr;
  if (given("--batch-size")) c.batch_size = v.batch_size;
  if (given("--early-stop")) c.early_stop = v.early_stop;
  if (given("--seed")) c.seed = v.seed;
  if (given("--reward")) c.reward = v.reward;
  if (given("--surrogate")) c.surrogate = v.surrogate;
  if (given("--policy")) c.policy = v.policy;
  if (given("--init-weights")) c.init_weights = v.init_weights;
  if (given("--out")) c.output_dir = v.output_dir;
  if (f.workers_flag) c.workers = *f.workers_flag;
  if (given("--oracle")) c.oracle = f.oracle.command;
  if (given("--oracle-table")) c.oracle_table = f.oracle.table;
  if (given("--oracle-processes")) c.oracle_processes = f.oracle.processes;
  if (f.no_time) c.record_time = false;
  if (v.debug_checks) c.debug_checks = true;
  return c;
}

int cmd_search(const SearchFlags& f) {
  std::unique_ptr<CemEngine> engine;
  if (!f.resume.empty()) {
    CemConfig c = CemConfig::load((fs::path(f.resume) / "config.json").string());
    c.output_dir.clear();
    if (f.app->count("--generations") > 0) c.generations = f.values.generations;
    if (f.workers_flag) c.workers = *f.workers_flag;
    engine = make_engine(c, stub_binary_path());
    engine->restore_checkpoint(f.resume);
    engine->attach_run_directory(f.resume);
  } else {
    engine = make_engine(merge_search_config(f), stub_binary_path());
  }
  const RunResult r = engine->run([&](const GenerationStats& s) {
    if (!f.quiet) {
      std::cerr << "t=" << s.t << " best=" << s.best << " cutoff=" << s.cutoff
                << " new=" << s.new_noniso << " eta=" << s.eta << " evals=" << s.evals << '\n';
    }
  });
  if (r.history.empty() && !engine->best()) {
    std::cout << "no generations run\n";
    return 0;
  }
  const BestGraph& b = engine->best() ? *engine->best() : r.best;
  std::cout << "best " << b.graph.order() << ' ' << to_string(encode_int(b.graph)) << ' '
            << b.value << '\n';
  if (!f.quiet) {
    std::cerr << "hit generation " << r.hit_generation << ", generations " << engine->generation()
              << ", distinct evaluations " << engine->cache().size()
              << (r.early_stopped ? ", stopped early" : "") << '\n';
  }
  return 0;
}

// --- verify -----------------------------------------------------------------

int cmd_verify(const std::string& code_text, int n, const std::string& checks_text,
               const std::string& core, const OracleFlags& oracle, int workers) {
  const Graph g = read_graph(code_text, n);
  std::cout << "n " << g.order() << "\nedges " << g.size() << '\n';
  std::shared_ptr<OraclePool> pool;
  std::optional<std::uint64_t> plane;
  std::optional<std::uint64_t> sphere;
  for (const auto& check : split(checks_text, ',')) {
    if (check == "rigid") {
      std::cout << "minimally_rigid " << yes(is_minimally_rigid(g)) << '\n';
    } else if (check == "nac") {
      std::cout << "nac " << count_nac(g, workers) << '\n';
    } else if (check == "structure") {
      std::cout << to_string(structural_report(g));
    } else if (check == "peel") {
      const PeelResult p = peel_to_core(g, named_core(core));
      std::cout << "peels_to_core " << yes(p.success);
      for (Vertex v : p.order) std::cout << ' ' << v;
      std::cout << '\n';
    } else if (check == "aut") {
      std::cout << "automorphisms " << to_string(automorphism_count(g)) << '\n';
    } else if (check == "plane" || check == "sphere" || check == "mbezout") {
      if (!oracle.configured()) throw UsageError("check '" + check + "' needs an oracle");
      auto reward = make_reward(oracle.opts(check, workers), pool);
      const std::uint64_t value = reward->evaluate(g);
      std::cout << check << ' ' << value << '\n';
      if (check == "plane") plane = value;
      if (check == "sphere") sphere = value;
    } else {
      throw UsageError("unknown check '" + check +
                       "' (rigid, nac, structure, peel, aut, plane, sphere, mbezout)");
    }
  }
  if (plane && sphere) std::cout << "plane_le_sphere " << yes(*plane <= *sphere) << '\n';
  return 0;
}

// --- impact -----------------------------------------------------------------

int cmd_impact(const std::string& code_text, int n, const std::string& reward_name,
               const std::string& kinds, const std::string& csv_path, const OracleFlags& oracle,
               int workers) {
  const Graph g = read_graph(code_text, n);
  bool zero = false;
  bool one = false;
  for (const auto& k : split(kinds, ',')) {
    if (k == "zero" || k == "0") {
      zero = true;
    } else if (k == "one" || k == "1") {
      one = true;
    } else {
      throw UsageError("unknown extension kind '" + k + "' (zero, one)");
    }
  }
  // NAC children are scored one per thread; oracle rewards go through the pool.
  auto reward = make_reward(oracle.opts(reward_name, 1));
  const bool nac = reward_name == "nac";
  const ImpactResult r = extension_impact(
      g, [&](const Graph& child) { return reward->evaluate(child); }, zero, one,
      nac ? workers : 1);
  const std::string csv = impact_csv(r);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw UsageError("cannot write '" + csv_path + "'");
    out << csv;
  } else {
    std::cout << csv;
  }
  std::cout << "children " << r.table.size() << '\n';
  std::cout << "best " << r.best_child.order() << ' ' << to_string(encode_int(r.best_child)) << ' '
            << r.best_value << '\n';
  return 0;
}

// --- transfer-eval ----------------------------------------------------------

int cmd_transfer(const std::string& weights, int target, const std::string& reward_name,
                 std::size_t count, std::uint64_t seed, std::uint64_t budget,
                 const std::string& histogram_path, const OracleFlags& oracle, int workers) {
  auto policy = load_policy(weights);
  if (policy->n_max() < target) policy = extend_to_n(*policy, target);
  auto reward = std::make_shared<CachedReward>(make_reward(oracle.opts(reward_name, workers)));
  const DeployResult r = deploy_eval(*policy, target, *reward, count, seed, workers, budget);
  std::cout << "distinct " << r.distinct << "\nattempts " << r.attempts << "\npartial "
            << yes(r.partial) << '\n';
  std::cout << "best " << target << ' ' << to_string(encode_int(r.best_graph)) << ' ' << r.best
            << '\n';
  if (!histogram_path.empty()) {
    std::ofstream out(histogram_path);
    if (!out) throw UsageError("cannot write '" + histogram_path + "'");
    out << "value,count\n";
    for (const auto& [value, c] : r.histogram) out << value << ',' << c << '\n';
  }
  return 0;
}

// --- enumerate --------------------------------------------------------------

int cmd_enumerate(int n, const std::string& mode, const std::string& emit, int guard, int workers) {
  std::vector<CanonicalCode> classes;
  if (mode == "all") {
    classes = enumerate_minimally_rigid(n, guard > 0 ? guard : 10, workers);
  } else if (mode == "zero-only") {
    classes = enumerate_zero_ext_constructible(n, guard > 0 ? guard : 9, workers);
  } else {
    throw UsageError("unknown mode '" + mode + "' (all, zero-only)");
  }
  std::cout << "count " << classes.size() << '\n';
  if (mode == "zero-only") {
    const Rational bound = prop1_lower_bound(n);
    std::cout << "lower_bound " << bound << '\n';
    std::cout << "bound_holds " << yes(Rational(static_cast<long long>(classes.size())) >= bound)
              << '\n';
  }
  if (!emit.empty()) {
    std::ofstream out(emit);
    if (!out) throw UsageError("cannot write '" + emit + "'");
    for (const auto& c : classes) out << c.n << ' ' << to_string(c.value()) << '\n';
  }
  return 0;
}

// --- codec ------------------------------------------------------------------

int cmd_encode(const std::vector<std::string>& edge_tokens, int n) {
  std::vector<Edge> edges;
  int top = -1;
  for (const auto& token : edge_tokens) {
    for (const auto& piece : split(token, ',')) {
      const auto dash = piece.find('-');
      if (dash == std::string::npos) throw UsageError("edge '" + piece + "' is not of the form u-v");
      const int u = std::stoi(piece.substr(0, dash));
      const int v = std::stoi(piece.substr(dash + 1));
      edges.push_back({u, v});
      top = std::max({top, u, v});
    }
  }
  if (n <= 0) n = top + 1;
  if (n < 1 || top >= n) throw UsageError("vertex count does not cover the edges");
  std::cout << to_string(encode_int(Graph(n, edges))) << '\n';
  return 0;
}

int cmd_decode(const std::string& code_text, int n) {
  const Graph g = read_graph(code_text, n);
  std::cout << "n " << g.order() << "\nedges";
  for (const auto& e : g.edges()) std::cout << ' ' << e.u << '-' << e.v;
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rigid: extremal minimally rigid graph search and certificate checks"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "threads; 0 uses all cores")->check(CLI::NonNegativeNumber);

  SearchFlags search;
  add_search_options(app.add_subcommand("search", "deep cross-entropy search"), search);

  auto* verify = app.add_subcommand("verify", "check a graph given by its integer code");
  std::string v_code;
  int v_n = 0;
  std::string v_checks = "rigid";
  std::string v_core = "k33";
  OracleFlags v_oracle;
  verify->add_option("code", v_code, "integer code")->required();
  verify->add_option("--n", v_n, "vertex count (inferred when omitted)");
  verify->add_option("--checks", v_checks,
                     "comma list of rigid, nac, structure, peel, aut, plane, sphere, mbezout");
  verify->add_option("--core", v_core, "peel target: k33, K<n> or <n>:<code>");
  v_oracle.add(verify);

  auto* impact = app.add_subcommand("impact", "score every child of one extension");
  std::string i_code;
  int i_n = 0;
  std::string i_reward = "nac";
  std::string i_kinds = "zero,one";
  std::string i_csv;
  OracleFlags i_oracle;
  impact->add_option("code", i_code)->required();
  impact->add_option("--n", i_n);
  impact->add_option("--reward", i_reward);
  impact->add_option("--kinds", i_kinds, "comma list of zero, one");
  impact->add_option("--csv", i_csv, "write the per-child table here instead of stdout");
  i_oracle.add(impact);

  auto* transfer = app.add_subcommand("transfer-eval", "deploy trained weights at another size");
  std::string t_weights;
  int t_target = 0;
  std::string t_reward = "nac";
  std::size_t t_count = 10000;
  std::uint64_t t_seed = 0;
  std::uint64_t t_budget = 0;
  std::string t_hist;
  OracleFlags t_oracle;
  transfer->add_option("--weights", t_weights)->required();
  transfer->add_option("--target", t_target, "vertex count to build")->required();
  transfer->add_option("--reward", t_reward);
  transfer->add_option("--count", t_count, "distinct graphs to evaluate");
  transfer->add_option("--seed", t_seed);
  transfer->add_option("--budget", t_budget, "rollout limit (default 20 * count)");
  transfer->add_option("--histogram", t_hist, "write value,count CSV");
  t_oracle.add(transfer);

  auto* enumerate = app.add_subcommand("enumerate", "count minimally rigid classes");
  int e_n = 0;
  std::string e_mode = "all";
  std::string e_emit;
  int e_guard = 0;
  enumerate->add_option("n", e_n)->required();
  enumerate->add_option("--mode", e_mode, "all or zero-only");
  enumerate->add_option("--emit", e_emit, "write 'n code' lines");
  enumerate->add_option("--guard", e_guard, "raise the size limit");

  auto* codec = app.add_subcommand("codec", "integer codec");
  codec->require_subcommand(1);
  auto* encode = codec->add_subcommand("encode", "edge list to integer");
  std::vector<std::string> c_edges;
  int c_n = 0;
  encode->add_option("edges", c_edges, "edges as u-v (comma or space separated)");
  encode->add_option("--n", c_n);
  auto* decode = codec->add_subcommand("decode", "integer to edge list");
  std::string d_code;
  int d_n = 0;
  decode->add_option("code", d_code)->required();
  decode->add_option("--n", d_n);

  SearchFlags study;
  auto* sched = app.add_subcommand("schedule-study", "compare entropy schedules");
  std::string s_schedules = "decay,constant,none";
  std::string s_seeds = "0";
  std::string s_csv;
  add_search_options(sched, study);
  sched->add_option("--schedules", s_schedules, "comma list of schedules");
  sched->add_option("--seeds", s_seeds, "comma list of seeds");
  sched->add_option("--csv", s_csv, "output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (workers == 0) workers = default_workers();
    if (app.got_subcommand("search")) {
      search.workers_flag = app.count("--workers") > 0 ? std::optional<int>(workers) : std::nullopt;
      return cmd_search(search);
    }
    if (app.got_subcommand("verify")) return cmd_verify(v_code, v_n, v_checks, v_core, v_oracle, workers);
    if (app.got_subcommand("impact")) {
      return cmd_impact(i_code, i_n, i_reward, i_kinds, i_csv, i_oracle, workers);
    }
    if (app.got_subcommand("transfer-eval")) {
      return cmd_transfer(t_weights, t_target, t_reward, t_count, t_seed, t_budget, t_hist, t_oracle,
                          workers);
    }
    if (app.got_subcommand("enumerate")) return cmd_enumerate(e_n, e_mode, e_emit, e_guard, workers);
    if (app.got_subcommand("codec")) {
      if (codec->got_subcommand("encode")) return cmd_encode(c_edges, c_n);
      return cmd_decode(d_code, d_n);
    }
    if (app.got_subcommand("schedule-study")) {
      std::vector<std::uint64_t> seeds;
      for (const auto& s : split(s_seeds, ',')) seeds.push_back(std::stoull(s));
      study.workers_flag = app.count("--workers") > 0 ? std::optional<int>(workers) : std::nullopt;
      const auto points =
          schedule_study(merge_search_config(study), split(s_schedules, ','), seeds, stub_binary_path());
      const std::string csv = schedule_study_csv(points);
      if (s_csv.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(s_csv);
        if (!out) throw UsageError("cannot write '" + s_csv + "'");
        out << csv;
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "rigid: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::invalid_argument& e) {
    std::cerr << "rigid: invalid number: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "rigid: number out of range: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rigid: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any selected criterion fails.
//
//   rigid-acceptance [--only 1,4,...]

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "policy_checks.hpp"
#include "rigid/cem.hpp"
#include "rigid/config.hpp"
#include "rigid/oracle.hpp"
#include "rigid/reward.hpp"
#include "rigid/rigidity.hpp"
#include "rigid/structure.hpp"
#include "support.hpp"

using namespace rigid;
using namespace rigid::test;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Shell {
  int status = -1;
  std::string out;
};

Shell run_cli(const std::string& args) {
  const std::string command = "'" + binary_dir() + "/rigid' " + args + " 2>/dev/null";
  Shell r;
  std::FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

/// Value after `key ` on the first line starting with it.
std::string field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

Graph k33() {
  Graph g(6);
  for (int a = 0; a < 3; ++a) {
    for (int b = 3; b < 6; ++b) g.add_edge(a, b);
  }
  return g;
}

// --- criteria ---------------------------------------------------------------

Outcome certificate_nac_counts() {
  Outcome o{true, ""};
  const std::pair<const char*, const char*> cases[] = {{"1817372602634323920930", "3125"},
                                                       {"170363797095532441635376", "2923"}};
  for (const auto& [code, expected] : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const Shell r = run_cli(std::string("verify ") + code + " --n 13 --checks rigid,nac");
    const double secs = seconds_since(t0);
    const std::string nac = field(r.out, "nac");
    const bool ok = r.status == 0 && field(r.out, "minimally_rigid") == "true" && nac == expected &&
                    secs <= 600;
    o.pass = o.pass && ok;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + "nac " + (nac.empty() ? "?" : nac) +
                " (want " + expected + ", " + fmt(secs) + " s)";
  }
  return o;
}

Outcome certificate_structure() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{true, ""};
  std::vector<bool> triangles;
  for (const auto& c : kSphereCertificates) {
    const Graph g = decode(c);
    const StructuralReport r = structural_report(g);
    const bool ok = is_minimally_rigid(g) && r.min_degree == 3 && r.max_degree == 4 &&
                    r.hamiltonian && r.chromatic_number == 3;
    if (!ok) {
      o.pass = false;
      o.detail += "n=" + std::to_string(c.n) + " fails degree/hamiltonian/chromatic; ";
    }
    triangles.push_back(r.every_vertex_in_triangle);
  }
  // Exactly one of the two 15-vertex graphs, and all larger ones.
  const bool fifteen = triangles[0] != triangles[1];
  const bool larger = triangles[2] && triangles[3] && triangles[4];
  o.pass = o.pass && fifteen && larger && seconds_since(t0) <= 300;
  o.detail += "every vertex in a triangle: 15a=" + std::string(triangles[0] ? "yes" : "no") +
              " 15b=" + (triangles[1] ? "yes" : "no") + " 16/17/18=" + (larger ? "yes" : "no") +
              " (" + fmt(seconds_since(t0)) + " s)";
  return o;
}

Outcome nac_peeling() {
  Outcome o{true, ""};
  for (std::size_t i : {0U, 2U, 3U}) {
    const PeelResult p = peel_to_core(decode(kNacCertificates[i]), k33());
    o.pass = o.pass && p.success;
    o.detail += "n=" + std::to_string(kNacCertificates[i].n) + (p.success ? " peels" : " stuck") + "; ";
  }
  int free = 0;
  for (const auto& c : kNacCertificates) free += structural_report(decode(c)).triangle_free;
  o.pass = o.pass && free == static_cast<int>(kNacCertificates.size());
  o.detail += std::to_string(free) + "/" + std::to_string(kNacCertificates.size()) + " triangle-free";
  return o;
}

Outcome search_reproduction() {
  const auto dir = temp_dir("accept-search");
  int hits = 0;
  std::string detail;
  double best_rate = 0;
  for (int seed = 1; seed <= 3; ++seed) {
    const auto out = dir / ("seed" + std::to_string(seed));
    const auto t0 = std::chrono::steady_clock::now();
    const Shell r = run_cli("search --reward nac --n 10 --seed " + std::to_string(seed) +
                            " --quiet --out '" + out.string() + "'");
    const double secs = seconds_since(t0);
    std::istringstream line(field(r.out, "best"));
    int n = 0;
    std::string code;
    std::uint64_t value = 0;
    line >> n >> code >> value;
    const bool hit = r.status == 0 && value == 307 && secs <= 7200;
    hits += hit;
    detail += "seed " + std::to_string(seed) + ": " + std::to_string(value) + " in " + fmt(secs) + " s; ";
    if (hit) {
      const auto policy = load_policy((out / "policy.weights").string());
      const double rate = regeneration_rate(*policy, decode_int(parse_bigint(code), 10), 10000,
                                            static_cast<std::uint64_t>(seed), 0);
      best_rate = std::max(best_rate, rate);
    }
  }
  std::filesystem::remove_all(dir);
  detail += "regeneration of the best graph " + fmt(best_rate);
  return {hits >= 2, detail};
}

Outcome extension_impact_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const Shell r = run_cli("impact 1817372602634323920930 --n 13 --reward nac --kinds zero,one --csv /dev/null");
  const double secs = seconds_since(t0);
  std::istringstream line(field(r.out, "best"));
  int n = 0;
  std::string code;
  std::uint64_t value = 0;
  line >> n >> code >> value;
  const bool same_child = isomorphic(decode_int(parse_bigint(code.empty() ? "0" : code), 14),
                                     decode(kNacChildren[1]));
  return {r.status == 0 && value == 6656 && secs <= 12 * 3600,
          "best child value " + std::to_string(value) + " over " + field(r.out, "children") +
              " children" + (same_child ? ", isomorphic to the listed child" : "") + " (" +
              fmt(secs) + " s)"};
}

Outcome equivariance() {
  const double worst = equivariance_deviation(100, 20240601);
  return {worst <= 1e-5, "max deviation " + fmt(worst)};
}

Outcome gradients() {
  std::mt19937_64 rng(424242);
  double worst = 0;
  int instances = 0;
  for (double eta : {0.0, 0.1}) {
    for (int trial = 0; trial < 20; ++trial) {
      GinPolicy gin(10, rng());
      worst = std::max(worst, gradient_error(gin, random_dataset(gin, 10, rng), eta, rng));
      FlatMlpPolicy flat(8, rng());
      worst = std::max(worst, gradient_error(flat, random_dataset(flat, 8, rng), eta, rng));
      instances += 2;
    }
  }
  return {worst <= 1e-4, std::to_string(instances) + " instances, worst relative error " + fmt(worst)};
}

Outcome schedule() {
  const double first = entropy_coefficient(1, 1, 6, 7);
  bool decreasing = true;
  for (int t = 2; t <= 500; ++t) {
    decreasing = decreasing && entropy_coefficient(t, 1, 6, 7) < entropy_coefficient(t - 1, 1, 6, 7);
  }
  return {std::abs(first - 0.994561) <= 1e-6 && decreasing,
          "eta(1) = " + fmt(first, 8) + (decreasing ? ", strictly decreasing to t=500" : ", NOT decreasing")};
}

Outcome enumeration() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string counts;
  for (int n = 3; n <= 8; ++n) {
    std::set<CanonicalCode> filtered;
    std::set<CanonicalCode> degenerate;
    for (const Graph& g : all_graph_classes(n)) {
      if (!brute_tight(g)) continue;
      filtered.insert(canonical_code(g));
      if (two_degenerate_to_edge(g)) degenerate.insert(canonical_code(g));
    }
    const auto closure = enumerate_minimally_rigid(n, 10, 0);
    const auto zero = enumerate_zero_ext_constructible(n, 9, 0);
    ok = ok && std::set<CanonicalCode>(closure.begin(), closure.end()) == filtered &&
         std::set<CanonicalCode>(zero.begin(), zero.end()) == degenerate &&
         Rational(static_cast<long long>(zero.size())) >= prop1_lower_bound(n);
    counts += std::to_string(closure.size()) + "/" + std::to_string(zero.size()) + " ";
  }
  const double secs = seconds_since(t0);
  return {ok && secs <= 1800, "all/0-ext classes n=3..8: " + counts + "(" + fmt(secs) + " s)"};
}

Outcome codec() {
  std::mt19937_64 rng(10000);
  int failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 24);
    BigInt x = 0;
    for (int b = 0; b < code_bits(n); ++b) x = (x << 1) | static_cast<unsigned>(rng() & 1U);
    failures += encode_int(decode_int(x, n)) != x;
  }
  int popcount_ok = 0;
  const auto certs = all_certificates();
  for (const auto& c : certs) {
    int ones = 0;
    for (BigInt y = parse_bigint(c.code); y != 0; y >>= 1) ones += static_cast<int>(y & 1U);
    popcount_ok += ones == decode(c).size();
  }
  const bool triangle = encode_int(Graph::complete(3)) == 7 && decode_int(7, 3) == Graph::complete(3);
  return {failures == 0 && popcount_ok == static_cast<int>(certs.size()) && triangle,
          std::to_string(10000 - failures) + "/10000 round trips, popcount " +
              std::to_string(popcount_ok) + "/" + std::to_string(certs.size()) +
              (triangle ? ", K3 <-> 7" : ", K3 mismatch")};
}

Outcome screening() {
  const auto dir = temp_dir("accept-screen");
  {
    std::ofstream out(dir / "table.txt");
    std::uint64_t i = 0;
    for (const auto& code : enumerate_minimally_rigid(6)) {
      const std::string c = to_string(code.value());
      out << "6 " << c << " plane " << 16 + i << "\n6 " << c << " sphere " << 24 + i << "\n6 "
          << c << " mbezout " << 40 - i << '\n';
      ++i;
    }
  }
  const std::string stub = binary_dir() + "/rigid-stub-oracle";
  CemConfig c;
  c.n = 6;
  c.m = 1000;
  c.generations = 3;
  c.early_stop = 0;
  c.reward = "plane";
  c.rho_main = 0.256;
  c.oracle_table = (dir / "table.txt").string();
  c.seed = 1;
  std::vector<std::size_t> main_counts;
  for (const auto& s : make_engine(c, stub)->run().history) main_counts.push_back(s.main_evaluations);
  const bool budget = main_counts == std::vector<std::size_t>(3, 256);

  // With rho_main = 1 the surrogate process never sees a request.
  RewardOptions opts;
  opts.oracle_table = c.oracle_table;
  opts.stub_binary = stub;
  opts.name = "plane";
  auto main = std::make_shared<CountingReward>(make_reward(opts));
  opts.name = "mbezout";
  auto surrogate_inner = make_reward(opts);
  auto surrogate = std::make_shared<CountingReward>(surrogate_inner);
  c.rho_main = 1.0;
  CemEngine plain(c.resolved(), main, surrogate, make_policy(PolicyKind::Gin, 6, 1));
  std::size_t surrogate_stats = 0;
  for (const auto& s : plain.run().history) surrogate_stats += s.surrogate_evaluations;
  const auto* pool_reward = dynamic_cast<OracleReward*>(surrogate_inner.get());
  const bool silent = surrogate->count() == 0 && surrogate_stats == 0 && pool_reward != nullptr &&
                      pool_reward->pool().requests() == 0;

  // Plane <= Sphere for every pair in the bundled table, asked through the stub.
  const OracleTable table = OracleTable::load(source_dir() + "/data/stub_table.txt");
  OracleClient client(stub_oracle_command(stub, source_dir() + "/data/stub_table.txt"));
  int pairs = 0;
  bool ordered = true;
  std::set<std::pair<int, std::string>> done;
  for (const auto& e : table.entries()) {
    const Graph g = decode_int(e.code, e.n);
    if (!done.insert({e.n, to_string(canonical_code(g).value())}).second) continue;
    if (!table.lookup(OracleInvariant::Plane, g) || !table.lookup(OracleInvariant::Sphere, g)) continue;
    ordered = ordered && client.query(OracleInvariant::Plane, g) <= client.query(OracleInvariant::Sphere, g);
    ++pairs;
  }
  std::filesystem::remove_all(dir);
  std::string counts;
  for (auto k : main_counts) counts += std::to_string(k) + " ";
  return {budget && silent && ordered && pairs > 0,
          "main evaluations per generation: " + counts + "; surrogate requests at rho 1: " +
              std::to_string(surrogate->count()) + "; plane <= sphere on " + std::to_string(pairs) +
              " stub pairs" + (ordered ? "" : " (VIOLATED)")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "criteria to run (default all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"certificate NAC counts", certificate_nac_counts},
      {"certificate structure", certificate_structure},
      {"NAC peeling and triangle-freeness", nac_peeling},
      {"NAC search at n=10 reaches 307", search_reproduction},
      {"extension impact of the n=13 NAC graph", extension_impact_check},
      {"permutation equivariance", equivariance},
      {"loss gradients", gradients},
      {"entropy schedule", schedule},
      {"enumeration oracles", enumeration},
      {"integer codec", codec},
      {"two-stage screening", screening},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << id << ' ' << (o.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

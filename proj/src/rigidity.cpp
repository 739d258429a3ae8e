#include "rigid/rigidity.hpp"

#include <algorithm>
#include <bit>
#include <mutex>
#include <sstream>
#include <unordered_set>

#include "rigid/parallel.hpp"

namespace rigid {

Extension Extension::zero(Vertex a, Vertex b) {
  return {ExtensionKind::Zero, std::nullopt, std::min(a, b), std::max(a, b)};
}

Extension Extension::one(Vertex apex, Vertex a, Vertex b) {
  return {ExtensionKind::One, apex, std::min(a, b), std::max(a, b)};
}

bool Extension::applicable_to(const Graph& g) const {
  const int n = g.order();
  if (v == w || v < 0 || w < 0 || v >= n || w >= n) return false;
  if (kind == ExtensionKind::Zero) return !apex.has_value();
  if (!apex || *apex < 0 || *apex >= n || *apex == v || *apex == w) return false;
  return g.has_edge(v, w);
}

std::string to_string(ExtensionKind k) { return k == ExtensionKind::Zero ? "zero" : "one"; }

std::string to_string(const Extension& e) {
  std::ostringstream out;
  out << to_string(e.kind) << "(";
  if (e.apex) {
    out << *e.apex;
  } else {
    out << "-";
  }
  out << ",{" << e.v << "," << e.w << "})";
  return out.str();
}

PebbleGame::PebbleGame(int n)
    : pebbles_(static_cast<std::size_t>(n), 2), out_(static_cast<std::size_t>(n)) {}

bool PebbleGame::gather(Vertex root, Vertex blocked) {
  const std::size_t n = pebbles_.size();
  std::vector<Vertex> parent(n, -1);
  std::vector<char> seen(n, 0);
  seen[root] = 1;
  seen[blocked] = 1;
  std::vector<Vertex> stack{root};
  Vertex found = -1;
  while (!stack.empty() && found < 0) {
    const Vertex x = stack.back();
    stack.pop_back();
    for (Vertex y : out_[x]) {
      if (seen[y]) continue;
      seen[y] = 1;
      parent[y] = x;
      if (pebbles_[y] > 0) {
        found = y;
        break;
      }
      stack.push_back(y);
    }
  }
  if (found < 0) return false;
  // Reverse the path root -> ... -> found, moving one pebble to root.
  for (Vertex c = found; c != root; c = parent[c]) {
    const Vertex p = parent[c];
    auto& edges = out_[p];
    edges.erase(std::find(edges.begin(), edges.end(), c));
    out_[c].push_back(p);
  }
  --pebbles_[found];
  ++pebbles_[root];
  return true;
}

bool PebbleGame::try_insert(Vertex u, Vertex v) {
  while (pebbles_[u] < 2) {
    if (!gather(u, v)) return false;
  }
  while (pebbles_[v] < 2) {
    if (!gather(v, u)) return false;
  }
  --pebbles_[u];
  out_[u].push_back(v);
  return true;
}

bool is_minimally_rigid(const Graph& g) {
  const int n = g.order();
  if (n < 2) return false;
  if (g.size() != 2 * n - 3) return false;
  PebbleGame game(n);
  for (const auto& e : g.edges()) {
    if (!game.try_insert(e.u, e.v)) return false;
  }
  return true;
}

Graph apply_extension(const Graph& g, const Extension& e) {
  if (!e.applicable_to(g)) {
    throw ExtensionError("extension " + to_string(e) + " is not applicable to a graph with " +
                         std::to_string(g.order()) + " vertices");
  }
  const int n = g.order();
  std::vector<Edge> edges = g.edges();
  Graph out(n + 1, edges);
  const Vertex z = n;
  out.add_edge(e.v, z);
  out.add_edge(e.w, z);
  if (e.kind == ExtensionKind::One) {
    out.remove_edge(e.v, e.w);
    out.add_edge(*e.apex, z);
  }
  return out;
}

std::vector<Extension> enumerate_extensions(const Graph& g) {
  const int n = g.order();
  std::vector<Extension> out;
  for (Vertex v = 0; v < n; ++v) {
    for (Vertex w = v + 1; w < n; ++w) out.push_back(Extension::zero(v, w));
  }
  for (Vertex u = 0; u < n; ++u) {
    for (Vertex v = 0; v < n; ++v) {
      if (v == u) continue;
      for (Vertex w = v + 1; w < n; ++w) {
        if (w == u || !g.has_edge(v, w)) continue;
        out.push_back(Extension::one(u, v, w));
      }
    }
  }
  return out;
}

namespace {

using CodeSet = std::unordered_set<CanonicalCode, CanonicalCodeHash>;

std::vector<CanonicalCode> close_under(int n, int guard, int workers, bool zero_only,
                                       const char* what) {
  if (n < 2) throw DomainError(std::string(what) + " needs n >= 2");
  if (n > guard) {
    throw DomainError(std::string(what) + " refused for n = " + std::to_string(n) +
                      " (guard " + std::to_string(guard) +
                      "); the class count grows super-exponentially, raise the guard "
                      "explicitly to proceed");
  }
  std::vector<CanonicalCode> level{canonical_code(Graph::complete(2))};
  for (int k = 2; k < n; ++k) {
    const int shards = std::max(1, workers);
    std::vector<CodeSet> found(static_cast<std::size_t>(shards));
    std::vector<std::mutex> locks(static_cast<std::size_t>(shards));
    parallel_for(level.size(), workers, [&](std::size_t i) {
      const Graph g = level[i].graph();
      for (const auto& e : enumerate_extensions(g)) {
        if (zero_only && e.kind != ExtensionKind::Zero) continue;
        CanonicalCode code = canonical_code(apply_extension(g, e));
        const std::size_t shard = CanonicalCodeHash{}(code) % found.size();
        std::lock_guard lock(locks[shard]);
        found[shard].insert(std::move(code));
      }
    });
    level.clear();
    for (auto& shard : found) {
      level.insert(level.end(), std::make_move_iterator(shard.begin()),
                   std::make_move_iterator(shard.end()));
    }
    std::sort(level.begin(), level.end());
  }
  return level;
}

}  // namespace

std::vector<CanonicalCode> enumerate_minimally_rigid(int n, int guard, int workers) {
  return close_under(n, guard, workers, false, "enumerate_minimally_rigid");
}

std::vector<CanonicalCode> enumerate_zero_ext_constructible(int n, int guard, int workers) {
  return close_under(n, guard, workers, true, "enumerate_zero_ext_constructible");
}

Rational prop1_lower_bound(int n) {
  if (n < 2) throw DomainError("prop1_lower_bound needs n >= 2");
  BigInt factorial = 1;
  for (int i = 2; i <= n - 2; ++i) factorial *= i;
  BigInt denominator = BigInt(n) << (n - 2);
  return Rational(factorial, denominator);
}

namespace {

class Peeler {
 public:
  Peeler(const Graph& g, const Graph& core)
      : g_(g), core_size_(core.order()), core_code_(canonical_code(core)) {}

  bool search(Row mask, std::vector<Vertex>& order) {
    const int k = std::popcount(mask);
    if (k == core_size_) return canonical_code(g_.induced(mask)) == core_code_;
    if (k < core_size_ || failed_.contains(mask)) return false;
    Row rest = mask;
    while (rest != 0) {
      const Vertex v = std::countr_zero(rest);
      rest &= rest - 1;
      if (std::popcount(g_.neighbors(v) & mask) != 2) continue;
      order.push_back(v);
      if (search(mask & ~(Row{1} << v), order)) return true;
      order.pop_back();
    }
    failed_.insert(mask);
    return false;
  }

 private:
  const Graph& g_;
  int core_size_;
  CanonicalCode core_code_;
  std::unordered_set<Row> failed_;
};

}  // namespace

PeelResult peel_to_core(const Graph& g, const Graph& core) {
  PeelResult result;
  const int removed = g.order() - core.order();
  if (removed < 0 || g.size() - 2 * removed != core.size()) return result;
  Peeler peeler(g, core);
  result.success = peeler.search(g.vertex_mask(), result.order);
  if (!result.success) result.order.clear();
  return result;
}

ImpactResult extension_impact(const Graph& g, const GraphScore& score, bool zero_kind,
                              bool one_kind, int workers) {
  std::vector<Extension> chosen;
  std::vector<Graph> children;
  CodeSet seen;
  for (const auto& e : enumerate_extensions(g)) {
    if (e.kind == ExtensionKind::Zero ? !zero_kind : !one_kind) continue;
    Graph child = apply_extension(g, e);
    if (!seen.insert(canonical_code(child)).second) continue;
    chosen.push_back(e);
    children.push_back(std::move(child));
  }
  if (children.empty()) throw DomainError("no extension of the selected kinds applies");

  std::vector<std::uint64_t> values(children.size());
  parallel_for(children.size(), workers, [&](std::size_t i) {
    try {
      values[i] = score(children[i]);
    } catch (const Error& err) {
      throw Error(err.kind(), "child " + to_string(encode_int(children[i])) + " (" +
                                  to_string(chosen[i]) + "): " + err.what());
    }
  });

  ImpactResult result;
  std::size_t best = 0;
  for (std::size_t i = 0; i < children.size(); ++i) {
    result.table.push_back(
        {encode_int(children[i]), chosen[i].kind, chosen[i], values[i]});
    if (values[i] > values[best]) best = i;
  }
  result.best_child = children[best];
  result.best_value = values[best];
  return result;
}

std::string impact_csv(const ImpactResult& r) {
  std::ostringstream out;
  out << "child_code,kind,value\n";
  for (const auto& row : r.table) {
    out << to_string(row.child_code) << ',' << to_string(row.kind) << ',' << row.value << '\n';
  }
  return out.str();
}

}  // namespace rigid

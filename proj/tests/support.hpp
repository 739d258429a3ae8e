#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rigid/canonical.hpp"
#include "rigid/graph.hpp"

namespace rigid::test {

struct Certificate {
  int n;
  const char* code;
  std::uint64_t value;
};

// Sphere# certificates on 15..18 vertices.
inline const std::vector<Certificate> kSphereCertificates = {
    {15, "2000828459594098240497450525056", 278528},
    {15, "22185205662832118156851245393968", 278528},
    {16, "676317030175026185879559871219632902", 819200},
    {17, "1708810961581179146514778090735835808768", 2228224},
    {18, "5717703424785600896298030199603140199580763136", 6127616},
};

// Best single 1-extensions of the sphere certificates.
inline const std::vector<Certificate> kSphereChildren = {
    {15, "755920348961494135657743057152", 245760},
    {16, "65557947275202461973507167815775232", 688128},
    {17, "44322443031028970019396990995970331435057", 2113536},
};

// NAC# certificates on 13..18 vertices.
inline const std::vector<Certificate> kNacCertificates = {
    {13, "1817372602634323920930", 3125},
    {14, "2178541080686613138604444182", 7521},
    {15, "35514488197670496374812652340870", 15963},
    {16, "88454699302609837679256749570852374", 37496},
    {17, "43646696667421322394332935806613331125984", 88257},
    {18, "44879647396852278983534873867663098247119872", 199719},
};

// Reference constructions on 13..17 vertices.
inline const std::vector<Certificate> kNacReference = {
    {13, "170363797095532441635376", 2923},
    {14, "1395360292174978547951223617", 7063},
    {15, "22859454182150718848230338095108", 14127},
    {16, "749023707617915212187976649078898721", 35133},
    {17, "49086874595737144883235931874747612135940", 70267},
};

// Best single extensions of the NAC certificates.
inline const std::vector<Certificate> kNacChildren = {
    {13, "189565301677203464126464", 2923},
    {14, "14999728119619681459012112", 6656},
    {15, "35692752091932812077244995486002", 15763},
    {16, "1163731142807089982295744369657991216", 37207},
    {17, "5796200596001745654800091751920657580344", 81042},
    {18, "5720848934857304615415085872018485039436749312", 184592},
};

inline std::vector<Certificate> all_certificates() {
  std::vector<Certificate> out;
  for (const auto* list :
       {&kSphereCertificates, &kSphereChildren, &kNacCertificates, &kNacReference, &kNacChildren}) {
    out.insert(out.end(), list->begin(), list->end());
  }
  return out;
}

inline Graph decode(const Certificate& c) { return decode_int(parse_bigint(c.code), c.n); }

inline Graph random_graph(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  Graph g(n);
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (coin(rng)) g.add_edge(u, v);
    }
  }
  return g;
}

inline std::vector<Vertex> random_permutation(int n, std::mt19937_64& rng) {
  std::vector<Vertex> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

/// Smallest integer code over all n! labelings.
inline std::vector<std::uint64_t> brute_min_code(const Graph& g) {
  std::vector<Vertex> perm(static_cast<std::size_t>(g.order()));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::uint64_t> best;
  bool first = true;
  do {
    auto code = packed_code(g.relabeled(perm));
    if (first || code < best) best = std::move(code);
    first = false;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline std::uint64_t brute_automorphisms(const Graph& g) {
  std::vector<Vertex> perm(static_cast<std::size_t>(g.order()));
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t count = 0;
  do {
    if (g.relabeled(perm) == g) ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return count;
}

/// (2,3)-tight by counting induced edges on every vertex subset of size >= 2.
inline bool brute_tight(const Graph& g) {
  const int n = g.order();
  if (g.size() != 2 * n - 3) return false;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const int k = std::popcount(mask);
    if (k < 2) continue;
    int edges = 0;
    for (int v = 0; v < n; ++v) {
      if ((mask >> v) & 1U) edges += std::popcount(g.neighbors(v) & mask);
    }
    if (edges / 2 > 2 * k - 3) return false;
  }
  return true;
}

/// Every isomorphism class of graphs on n vertices, grown one vertex at a
/// time with every neighbourhood and deduplicated by minimal code.
inline std::vector<Graph> all_graph_classes(int n) {
  std::vector<Graph> level = {Graph(1)};
  for (int k = 2; k <= n; ++k) {
    std::map<std::vector<std::uint64_t>, Graph> next;
    for (const Graph& h : level) {
      for (std::uint64_t nb = 0; nb < (std::uint64_t{1} << (k - 1)); ++nb) {
        Graph g(k);
        for (const Edge& e : h.edges()) g.add_edge(e.u, e.v);
        for (int v = 0; v < k - 1; ++v) {
          if ((nb >> v) & 1U) g.add_edge(v, k - 1);
        }
        next.emplace(canonical_code(g).limbs, g);
      }
    }
    level.clear();
    for (auto& [code, g] : next) level.push_back(std::move(g));
  }
  return level;
}

/// True when repeatedly deleting degree-2 vertices reaches a single edge.
inline bool two_degenerate_to_edge(Graph g) {
  while (g.order() > 2) {
    int found = -1;
    for (int v = 0; v < g.order(); ++v) {
      if (g.degree(v) == 2) {
        found = v;
        break;
      }
    }
    if (found < 0) return false;
    g = g.induced(g.vertex_mask() & ~(Row{1} << found));
  }
  return g.order() == 2 && g.size() == 1;
}

/// Simple cycles as edge-index sets.
inline std::vector<std::vector<int>> simple_cycles(const Graph& g) {
  const auto edges = g.edges();
  auto index = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (edges[i].u == a && edges[i].v == b) return static_cast<int>(i);
    }
    return -1;
  };
  std::set<std::vector<int>> found;
  const int n = g.order();
  std::vector<int> path;
  std::vector<char> on(static_cast<std::size_t>(n), 0);
  // Cycles rooted at their smallest vertex.
  std::function<void(int, int)> dfs = [&](int root, int v) {
    for (int w = 0; w < n; ++w) {
      if (!g.has_edge(v, w) || w < root) continue;
      if (w == root && path.size() >= 3) {
        std::vector<int> cyc;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) cyc.push_back(index(path[i], path[i + 1]));
        cyc.push_back(index(path.back(), root));
        std::sort(cyc.begin(), cyc.end());
        found.insert(cyc);
      } else if (w != root && !on[static_cast<std::size_t>(w)]) {
        on[static_cast<std::size_t>(w)] = 1;
        path.push_back(w);
        dfs(root, w);
        path.pop_back();
        on[static_cast<std::size_t>(w)] = 0;
      }
    }
  };
  for (int r = 0; r < n; ++r) {
    path = {r};
    on.assign(static_cast<std::size_t>(n), 0);
    on[static_cast<std::size_t>(r)] = 1;
    dfs(r, r);
  }
  return {found.begin(), found.end()};
}

/// NAC-colorings from the cycle definition, up to swapping colors.
inline std::uint64_t brute_nac(const Graph& g) {
  const int m = g.size();
  const auto cycles = simple_cycles(g);
  std::uint64_t count = 0;
  for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << m); ++mask) {
    bool ok = true;
    for (const auto& cyc : cycles) {
      int red = 0;
      for (int e : cyc) red += static_cast<int>((mask >> e) & 1U);
      const int blue = static_cast<int>(cyc.size()) - red;
      if (red == 1 || blue == 1) {
        ok = false;
        break;
      }
    }
    if (ok) ++count;
  }
  return count / 2;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("rigid-" + tag + "-" + std::to_string(rng() % 1000000000));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string source_dir() { return RIGID_SOURCE_DIR; }
inline std::string binary_dir() { return RIGID_BINARY_DIR; }

}  // namespace rigid::test

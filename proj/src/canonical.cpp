#include "rigid/canonical.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <numeric>

namespace rigid {

std::size_t CanonicalCodeHash::operator()(const CanonicalCode& c) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(c.n);
  for (std::uint64_t limb : c.limbs) {
    h ^= limb + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

namespace {

using Cells = std::vector<Row>;

// Splits every cell by the number of neighbors in a splitter cell until the
// ordered partition is equitable. Subcells are ordered by increasing count so
// the result depends only on the structure, not on vertex names.
void refine(const Graph& g, Cells& cells) {
  Cells next;
  std::array<Row, Graph::kMaxVertices + 1> bucket{};
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < cells.size(); ++s) {
      const Row splitter = cells[s];
      next.clear();
      for (Row cell : cells) {
        if (std::has_single_bit(cell)) {
          next.push_back(cell);
          continue;
        }
        int lo = Graph::kMaxVertices;
        int hi = 0;
        Row rest = cell;
        while (rest != 0) {
          const int v = std::countr_zero(rest);
          rest &= rest - 1;
          const int k = std::popcount(g.neighbors(v) & splitter);
          bucket[k] |= Row{1} << v;
          lo = std::min(lo, k);
          hi = std::max(hi, k);
        }
        for (int k = lo; k <= hi; ++k) {
          if (bucket[k] != 0) {
            next.push_back(bucket[k]);
            bucket[k] = 0;
          }
        }
      }
      if (next.size() != cells.size()) {
        cells.swap(next);
        changed = true;
        break;
      }
    }
  }
}

bool discrete(const Cells& cells, int n) { return static_cast<int>(cells.size()) == n; }

// First non-singleton cell of minimum size.
std::size_t target_cell(const Cells& cells) {
  std::size_t best = cells.size();
  int best_size = Graph::kMaxVertices + 1;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const int s = std::popcount(cells[i]);
    if (s > 1 && s < best_size) {
      best = i;
      best_size = s;
    }
  }
  return best;
}

Cells individualize(const Graph& g, const Cells& cells, std::size_t index, Vertex v) {
  Cells out;
  out.reserve(cells.size() + 1);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i == index) {
      out.push_back(Row{1} << v);
      out.push_back(cells[i] & ~(Row{1} << v));
    } else {
      out.push_back(cells[i]);
    }
  }
  refine(g, out);
  return out;
}

std::vector<Vertex> leaf_labeling(const Cells& cells) {
  std::vector<Vertex> lab(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) lab[i] = std::countr_zero(cells[i]);
  return lab;
}

std::vector<std::uint64_t> leaf_code(const Graph& g, const std::vector<Vertex>& lab) {
  const int n = g.order();
  std::vector<Vertex> pos(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pos[lab[i]] = i;
  return packed_code(g.relabeled(pos));
}

std::vector<int> cell_sizes(const Cells& cells) {
  std::vector<int> sizes(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) sizes[i] = std::popcount(cells[i]);
  return sizes;
}

struct UnionFind {
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<int> parent;
};

using Perm = std::vector<Vertex>;

UnionFind orbits_fixing(const std::vector<Perm>& autos, const std::vector<Vertex>& prefix,
                        int n) {
  UnionFind uf(n);
  for (const auto& a : autos) {
    bool fixes = std::all_of(prefix.begin(), prefix.end(),
                             [&](Vertex p) { return a[p] == p; });
    if (!fixes) continue;
    for (int v = 0; v < n; ++v) uf.unite(v, a[v]);
  }
  return uf;
}

// Maps leaf `from` onto leaf `to`: from[i] -> to[i].
Perm leaf_map(const std::vector<Vertex>& from, const std::vector<Vertex>& to) {
  Perm p(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) p[from[i]] = to[i];
  return p;
}

class CanonicalSearch {
 public:
  explicit CanonicalSearch(const Graph& g) : g_(g), n_(g.order()) {}

  CanonicalForm run() {
    Cells cells;
    if (n_ > 0) cells.push_back(g_.vertex_mask());
    refine(g_, cells);
    std::vector<Vertex> prefix;
    dfs(cells, prefix);
    return {CanonicalCode{n_, best_code_}, best_lab_};
  }

 private:
  void leaf(const Cells& cells) {
    auto lab = leaf_labeling(cells);
    auto code = leaf_code(g_, lab);
    if (!have_best_) {
      have_best_ = true;
      first_code_ = code;
      first_lab_ = lab;
      best_code_ = std::move(code);
      best_lab_ = std::move(lab);
      return;
    }
    if (code == first_code_) {
      autos_.push_back(leaf_map(lab, first_lab_));
    } else if (code == best_code_) {
      autos_.push_back(leaf_map(lab, best_lab_));
    }
    if (code < best_code_) {
      best_code_ = std::move(code);
      best_lab_ = std::move(lab);
    }
  }

  void dfs(const Cells& cells, std::vector<Vertex>& prefix) {
    if (discrete(cells, n_)) {
      leaf(cells);
      return;
    }
    const std::size_t t = target_cell(cells);
    std::vector<Vertex> explored;
    Row rest = cells[t];
    while (rest != 0) {
      const Vertex v = std::countr_zero(rest);
      rest &= rest - 1;
      if (!explored.empty()) {
        UnionFind uf = orbits_fixing(autos_, prefix, n_);
        const int root = uf.find(v);
        if (std::any_of(explored.begin(), explored.end(),
                        [&](Vertex w) { return uf.find(w) == root; })) {
          continue;
        }
      }
      prefix.push_back(v);
      dfs(individualize(g_, cells, t, v), prefix);
      prefix.pop_back();
      explored.push_back(v);
    }
  }

  const Graph& g_;
  int n_;
  bool have_best_ = false;
  std::vector<std::uint64_t> first_code_;
  std::vector<Vertex> first_lab_;
  std::vector<std::uint64_t> best_code_;
  std::vector<Vertex> best_lab_;
  std::vector<Perm> autos_;
};

// Searches the subtree below `cells` for a leaf whose code equals `target`,
// following only nodes whose cell-size sequence matches the reference path.
bool find_matching_leaf(const Graph& g, const Cells& cells, std::size_t depth,
                        const std::vector<std::vector<int>>& trace,
                        const std::vector<std::uint64_t>& target,
                        std::vector<Vertex>& found) {
  if (depth >= trace.size() || cell_sizes(cells) != trace[depth]) return false;
  if (discrete(cells, g.order())) {
    auto lab = leaf_labeling(cells);
    if (leaf_code(g, lab) != target) return false;
    found = std::move(lab);
    return true;
  }
  const std::size_t t = target_cell(cells);
  Row rest = cells[t];
  while (rest != 0) {
    const Vertex v = std::countr_zero(rest);
    rest &= rest - 1;
    if (find_matching_leaf(g, individualize(g, cells, t, v), depth + 1, trace, target,
                           found)) {
      return true;
    }
  }
  return false;
}

}  // namespace

CanonicalForm canonical_form(const Graph& g) { return CanonicalSearch(g).run(); }

CanonicalCode canonical_code(const Graph& g) { return canonical_form(g).code; }

bool isomorphic(const Graph& a, const Graph& b) {
  if (a.order() != b.order() || a.size() != b.size()) return false;
  return canonical_code(a) == canonical_code(b);
}

BigInt automorphism_count(const Graph& g) {
  const int n = g.order();
  BigInt count = 1;
  if (n <= 1) return count;
  Cells cells{g.vertex_mask()};
  refine(g, cells);
  std::vector<Vertex> prefix;
  std::vector<Perm> autos;
  while (!discrete(cells, n)) {
    const std::size_t t = target_cell(cells);
    const Vertex v = std::countr_zero(cells[t]);

    // Reference leaf below v along first children, with its size trace
    // starting at the child level.
    std::vector<std::vector<int>> trace;
    Cells walk = individualize(g, cells, t, v);
    trace.push_back(cell_sizes(walk));
    while (!discrete(walk, n)) {
      const std::size_t wt = target_cell(walk);
      walk = individualize(g, walk, wt, std::countr_zero(walk[wt]));
      trace.push_back(cell_sizes(walk));
    }
    const auto ref_lab = leaf_labeling(walk);
    const auto ref_code = leaf_code(g, ref_lab);

    std::vector<Vertex> in_orbit{v};
    std::vector<Vertex> outside;
    Row rest = cells[t] & ~(Row{1} << v);
    while (rest != 0) {
      const Vertex w = std::countr_zero(rest);
      rest &= rest - 1;
      UnionFind uf = orbits_fixing(autos, prefix, n);
      const int root = uf.find(w);
      if (uf.find(v) == root) {
        in_orbit.push_back(w);
        continue;
      }
      if (std::any_of(outside.begin(), outside.end(),
                      [&](Vertex x) { return uf.find(x) == root; })) {
        outside.push_back(w);
        continue;
      }
      std::vector<Vertex> lab;
      if (find_matching_leaf(g, individualize(g, cells, t, w), 0, trace, ref_code, lab)) {
        autos.push_back(leaf_map(lab, ref_lab));
        in_orbit.push_back(w);
      } else {
        outside.push_back(w);
      }
    }
    count *= static_cast<unsigned>(in_orbit.size());
    prefix.push_back(v);
    cells = individualize(g, cells, t, v);
  }
  return count;
}

}  // namespace rigid

#include "rigid/structure.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace rigid {

namespace {

constexpr int kStructureLimit = 20;

bool colorable(const Graph& g, int colors, std::vector<int>& color, int placed,
               const std::vector<Vertex>& order) {
  if (placed == g.order()) return true;
  const Vertex v = order[placed];
  // Symmetry break: a new color may only be the smallest unused one.
  int used = 0;
  for (int i = 0; i < placed; ++i) used = std::max(used, color[order[i]] + 1);
  for (int c = 0; c < std::min(colors, used + 1); ++c) {
    bool ok = true;
    Row r = g.neighbors(v);
    while (r != 0) {
      const int u = std::countr_zero(r);
      r &= r - 1;
      if (color[u] == c) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    color[v] = c;
    if (colorable(g, colors, color, placed + 1, order)) return true;
    color[v] = -1;
  }
  return false;
}

}  // namespace

bool is_hamiltonian(const Graph& g) {
  const int n = g.order();
  if (n > kStructureLimit) throw DomainError("Hamiltonicity check limited to 20 vertices");
  if (n < 3) return false;
  // reach[S]: endpoints v such that a path from vertex 0 covers exactly S and ends at v.
  std::vector<std::uint32_t> reach(std::size_t{1} << n, 0);
  reach[1] = 1;
  for (std::uint32_t s = 1; s < reach.size(); s += 2) {
    std::uint32_t ends = reach[s];
    while (ends != 0) {
      const int v = std::countr_zero(ends);
      ends &= ends - 1;
      std::uint32_t next = static_cast<std::uint32_t>(g.neighbors(v)) & ~s;
      while (next != 0) {
        const int u = std::countr_zero(next);
        next &= next - 1;
        reach[s | (1U << u)] |= 1U << u;
      }
    }
  }
  const std::uint32_t full = static_cast<std::uint32_t>(reach.size() - 1);
  return (reach[full] & static_cast<std::uint32_t>(g.neighbors(0))) != 0;
}

int chromatic_number(const Graph& g) {
  const int n = g.order();
  if (n > kStructureLimit) throw DomainError("chromatic number limited to 20 vertices");
  if (n == 0) return 0;
  std::vector<Vertex> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Vertex a, Vertex b) { return g.degree(a) > g.degree(b); });
  for (int k = 1; k <= n; ++k) {
    std::vector<int> color(static_cast<std::size_t>(n), -1);
    if (colorable(g, k, color, 0, order)) return k;
  }
  return n;
}

StructuralReport structural_report(const Graph& g) {
  const int n = g.order();
  if (n > kStructureLimit) throw DomainError("structural report limited to 20 vertices");
  StructuralReport r;
  for (Vertex v = 0; v < n; ++v) r.degrees.push_back(g.degree(v));
  std::sort(r.degrees.begin(), r.degrees.end());
  if (n > 0) {
    r.min_degree = r.degrees.front();
    r.max_degree = r.degrees.back();
  }
  r.every_vertex_in_triangle = n > 0;
  for (Vertex v = 0; v < n; ++v) {
    const bool in_triangle = triangles_at(g, v) > 0;
    if (in_triangle) r.triangle_free = false;
    if (!in_triangle) r.every_vertex_in_triangle = false;
  }
  r.hamiltonian = is_hamiltonian(g);
  r.chromatic_number = chromatic_number(g);
  return r;
}

std::string to_string(const StructuralReport& r) {
  std::ostringstream out;
  out << "degrees";
  for (int d : r.degrees) out << ' ' << d;
  out << "\nmin_degree " << r.min_degree << "\nmax_degree " << r.max_degree
      << "\ntriangle_free " << (r.triangle_free ? "true" : "false")
      << "\nevery_vertex_in_triangle " << (r.every_vertex_in_triangle ? "true" : "false")
      << "\nhamiltonian " << (r.hamiltonian ? "true" : "false") << "\nchromatic_number "
      << r.chromatic_number << '\n';
  return out.str();
}

}  // namespace rigid

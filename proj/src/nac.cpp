#include "rigid/nac.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>

#include "rigid/parallel.hpp"

namespace rigid {

namespace {

using Adjacency = std::array<Row, Graph::kMaxVertices>;

// True iff no `other` edge has both ends in one component of `same`.
bool components_separate(const Adjacency& same, const Adjacency& other, Row vertices) {
  Row remaining = vertices;
  while (remaining != 0) {
    const int v = std::countr_zero(remaining);
    Row comp = Row{1} << v;
    Row frontier = comp;
    while (frontier != 0) {
      const int x = std::countr_zero(frontier);
      frontier &= frontier - 1;
      const Row grow = same[x] & ~comp;
      comp |= grow;
      frontier |= grow;
    }
    remaining &= ~comp;
    if (std::has_single_bit(comp)) continue;
    Row members = comp;
    while (members != 0) {
      const int x = std::countr_zero(members);
      members &= members - 1;
      if ((other[x] & comp) != 0) return false;
    }
  }
  return true;
}

struct Coloring {
  Adjacency red{};
  Adjacency blue{};

  void set(const Edge& e, bool is_red) {
    const Row bu = Row{1} << e.u;
    const Row bv = Row{1} << e.v;
    if (is_red) {
      red[e.u] |= bv;
      red[e.v] |= bu;
      blue[e.u] &= ~bv;
      blue[e.v] &= ~bu;
    } else {
      blue[e.u] |= bv;
      blue[e.v] |= bu;
      red[e.u] &= ~bv;
      red[e.v] &= ~bu;
    }
  }

  bool nac(Row vertices) const {
    return components_separate(red, blue, vertices) && components_separate(blue, red, vertices);
  }
};

}  // namespace

bool is_nac_coloring(const Graph& g, const std::vector<bool>& red) {
  const auto edges = g.edges();
  if (red.size() != edges.size()) {
    throw DomainError("coloring has " + std::to_string(red.size()) + " entries for " +
                      std::to_string(edges.size()) + " edges");
  }
  std::size_t reds = 0;
  for (bool r : red) reds += r ? 1 : 0;
  if (reds == 0 || reds == edges.size()) return false;
  Coloring c;
  for (std::size_t i = 0; i < edges.size(); ++i) c.set(edges[i], red[i]);
  return c.nac(g.vertex_mask());
}

std::uint64_t count_nac(const Graph& g, int workers, int edge_guard) {
  const auto edges = g.edges();
  const int m = static_cast<int>(edges.size());
  if (m > edge_guard) {
    throw DomainError("count_nac refused: " + std::to_string(m) + " edges exceed the guard of " +
                      std::to_string(edge_guard) +
                      " (2^(|E|-1) colorings); raise the guard explicitly if the runtime is "
                      "acceptable");
  }
  if (m < 2) return 0;
  const int free_bits = m - 1;
  const std::uint64_t total = std::uint64_t{1} << free_bits;
  const std::uint64_t all_red = total - 1;
  const Row vertices = g.vertex_mask();

  const std::uint64_t chunks = std::min<std::uint64_t>(total, 256);
  const std::uint64_t per_chunk = total / chunks;
  std::atomic<std::uint64_t> count{0};
  parallel_for(static_cast<std::size_t>(chunks), workers, [&](std::size_t chunk) {
    const std::uint64_t begin = chunk * per_chunk;
    const std::uint64_t end = begin + per_chunk;
    Coloring c;
    c.set(edges[0], true);
    std::uint64_t gray = begin ^ (begin >> 1);
    for (int j = 0; j < free_bits; ++j) c.set(edges[j + 1], ((gray >> j) & 1U) != 0);
    std::uint64_t local = 0;
    for (std::uint64_t i = begin; i < end; ++i) {
      if (gray != all_red && c.nac(vertices)) ++local;
      if (i + 1 == end) break;
      const int flip = std::countr_zero(i + 1);
      gray ^= std::uint64_t{1} << flip;
      c.set(edges[flip + 1], ((gray >> flip) & 1U) != 0);
    }
    count += local;
  });
  return count.load();
}

}  // namespace rigid

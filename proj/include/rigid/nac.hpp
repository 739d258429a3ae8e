#pragma once

#include <cstdint>
#include <vector>

#include "rigid/graph.hpp"

namespace rigid {

/// Largest edge count accepted by count_nac (2^(|E|-1) colorings are visited).
inline constexpr int kNacEdgeGuard = 34;

/// `red[i]` colors edge i of g.edges() red; the others are blue. Uses the
/// component criterion: no edge of one color joins two vertices of a single
/// connected component of the other color's subgraph.
bool is_nac_coloring(const Graph& g, const std::vector<bool>& red);

/// Number of NAC-colorings up to swapping the colors. Edge 0 is fixed red and
/// the remaining colorings are visited in Gray-code order.
std::uint64_t count_nac(const Graph& g, int workers = 1, int edge_guard = kNacEdgeGuard);

}  // namespace rigid

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <vector>

#include "rigid/graph.hpp"

namespace rigid {

/// Isomorphism-class identifier: the packed integer code of the canonically
/// relabeled graph, together with the vertex count.
struct CanonicalCode {
  int n = 0;
  std::vector<std::uint64_t> limbs;

  BigInt value() const { return unpack_code(limbs); }
  Graph graph() const { return decode_int(value(), n); }

  friend bool operator==(const CanonicalCode&, const CanonicalCode&) = default;
  friend std::strong_ordering operator<=>(const CanonicalCode& a,
                                          const CanonicalCode& b) {
    if (auto c = a.n <=> b.n; c != 0) return c;
    return a.limbs <=> b.limbs;
  }
};

struct CanonicalCodeHash {
  std::size_t operator()(const CanonicalCode& c) const noexcept;
};

struct CanonicalForm {
  CanonicalCode code;
  /// labeling[i] is the vertex of the input graph that becomes vertex i.
  std::vector<Vertex> labeling;
};

/// Canonical labeling by equitable refinement and individualization, taking
/// the smallest code over all leaves of the search tree. Subtrees equivalent
/// under automorphisms found along the way are skipped.
CanonicalForm canonical_form(const Graph& g);
CanonicalCode canonical_code(const Graph& g);

bool isomorphic(const Graph& a, const Graph& b);

/// |Aut(G)| via orbit sizes along a stabilizer chain.
BigInt automorphism_count(const Graph& g);

}  // namespace rigid

template <>
struct std::hash<rigid::CanonicalCode> : rigid::CanonicalCodeHash {};

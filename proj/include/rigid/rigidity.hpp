#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "rigid/canonical.hpp"
#include "rigid/graph.hpp"

namespace rigid {

using Rational = boost::multiprecision::cpp_rational;

enum class ExtensionKind { Zero, One };

/// Henneberg move. A 0-extension joins a new vertex to the pair; a
/// 1-extension removes the pair edge and joins the new vertex to the pair
/// and the apex. `apex` is empty exactly for 0-extensions. The pair is
/// stored with v < w.
struct Extension {
  ExtensionKind kind = ExtensionKind::Zero;
  std::optional<Vertex> apex;
  Vertex v = 0;
  Vertex w = 1;

  static Extension zero(Vertex a, Vertex b);
  static Extension one(Vertex apex, Vertex a, Vertex b);

  bool applicable_to(const Graph& g) const;
  friend bool operator==(const Extension&, const Extension&) = default;
};

std::string to_string(const Extension& e);
std::string to_string(ExtensionKind k);

class ExtensionError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// (2,3) pebble game: accepts edges while the inserted set stays
/// (2,3)-sparse.
class PebbleGame {
 public:
  explicit PebbleGame(int n);
  /// Inserts uv if it is independent of the edges accepted so far.
  bool try_insert(Vertex u, Vertex v);

 private:
  bool gather(Vertex root, Vertex blocked);

  std::vector<int> pebbles_;
  std::vector<std::vector<Vertex>> out_;
};

bool is_minimally_rigid(const Graph& g);

Graph apply_extension(const Graph& g, const Extension& e);

/// All applicable extensions: the 0-extension block first (pairs in
/// lexicographic order), then 1-extensions by ascending apex, pairs
/// lexicographic.
std::vector<Extension> enumerate_extensions(const Graph& g);

/// Isomorphism classes of minimally rigid graphs on n vertices, computed as
/// the closure of K2 under extensions. Refuses n above `guard`.
std::vector<CanonicalCode> enumerate_minimally_rigid(int n, int guard = 10, int workers = 1);

/// Number of classes reachable from K2 by 0-extensions alone.
std::vector<CanonicalCode> enumerate_zero_ext_constructible(int n, int guard = 9,
                                                            int workers = 1);

/// (n-2)! / (n 2^(n-2)).
Rational prop1_lower_bound(int n);

struct PeelResult {
  bool success = false;
  /// Vertices of G deleted in order; each had degree 2 when removed.
  std::vector<Vertex> order;
};

/// Searches for a sequence of degree-2 vertex deletions reducing g to a graph
/// isomorphic to core.
PeelResult peel_to_core(const Graph& g, const Graph& core);

struct ImpactRow {
  BigInt child_code;
  ExtensionKind kind = ExtensionKind::Zero;
  Extension extension;
  std::uint64_t value = 0;
};

struct ImpactResult {
  Graph best_child;
  std::uint64_t best_value = 0;
  std::vector<ImpactRow> table;
};

using GraphScore = std::function<std::uint64_t(const Graph&)>;

/// Scores every non-isomorphic child of g reachable by one extension of the
/// selected kinds. Ties for the best value keep the first child in
/// enumeration order.
ImpactResult extension_impact(const Graph& g, const GraphScore& score, bool zero_kind,
                              bool one_kind, int workers = 1);

std::string impact_csv(const ImpactResult& r);

}  // namespace rigid

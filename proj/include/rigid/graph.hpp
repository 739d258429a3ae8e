#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace rigid {

using Vertex = int;
using BigInt = boost::multiprecision::cpp_int;
using Row = std::uint64_t;

struct Edge {
  Vertex u;
  Vertex v;
  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class ErrorKind { Domain, Usage, Oracle };

/// Base class of every error raised by the library. The CLI maps the kind to
/// an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

/// Transport, protocol, or reply errors from an external oracle process.
class OracleError : public Error {
 public:
  explicit OracleError(const std::string& what) : Error(ErrorKind::Oracle, what) {}
};

/// Simple undirected graph on vertices 0..n-1 stored as one adjacency bit row
/// per vertex. Rows are kept symmetric with a clear diagonal.
class Graph {
 public:
  static constexpr int kMaxVertices = 64;

  Graph() = default;
  explicit Graph(int n);
  Graph(int n, std::span<const Edge> edges);

  static Graph complete(int k);

  int order() const { return static_cast<int>(rows_.size()); }
  int size() const;

  bool has_edge(Vertex u, Vertex v) const { return (rows_[u] >> v) & 1U; }
  Row neighbors(Vertex v) const { return rows_[v]; }
  int degree(Vertex v) const { return std::popcount(rows_[v]); }
  Row vertex_mask() const;

  void add_edge(Vertex u, Vertex v);
  void remove_edge(Vertex u, Vertex v);

  /// Edges with u < v in lexicographic order.
  std::vector<Edge> edges() const;

  /// Returns the graph with vertex v of this graph renamed to perm[v].
  Graph relabeled(std::span<const Vertex> perm) const;

  /// Induced subgraph on the vertices of `mask`, renumbered in increasing order.
  Graph induced(Row mask) const;

  std::span<const Row> rows() const { return rows_; }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<Row> rows_;
};

/// K_k.
Graph complete_graph(int k);

// Integer codec: the upper triangle of the adjacency matrix read row by row
// (row 0 first) as a binary number whose first bit is the most significant.

/// Number of bits in the code of an n-vertex graph, n(n-1)/2.
int code_bits(int n);

/// Packed code with 64-bit limbs, most significant limb first. Comparing two
/// packed codes of the same n lexicographically compares the integers.
std::vector<std::uint64_t> packed_code(const Graph& g);
BigInt unpack_code(std::span<const std::uint64_t> limbs);

BigInt encode_int(const Graph& g);
Graph decode_int(const BigInt& x, int n);
int infer_n(const BigInt& x);

BigInt parse_bigint(const std::string& text);
std::string to_string(const BigInt& x);

struct LdpVector {
  double degree = 0;
  double min = 0;
  double max = 0;
  double mean = 0;
  double std = 0;
};

/// Local degree profile. Neighbor statistics are 0 when deg(v) <= 1.
LdpVector ldp(const Graph& g, Vertex v);

/// Number of triangles through v.
int triangles_at(const Graph& g, Vertex v);

/// Fraction of closed neighbor pairs of v; 0 when deg(v) <= 1.
double clustering(const Graph& g, Vertex v);

}  // namespace rigid

#include "rigid/graph.hpp"

#include <algorithm>
#include <cmath>

namespace rigid {

Graph::Graph(int n) {
  if (n < 0 || n > kMaxVertices) {
    throw DomainError("graph order " + std::to_string(n) + " outside [0, " +
                      std::to_string(kMaxVertices) + "]");
  }
  rows_.assign(static_cast<std::size_t>(n), 0);
}

Graph::Graph(int n, std::span<const Edge> edges) : Graph(n) {
  for (const auto& e : edges) add_edge(e.u, e.v);
}

Graph Graph::complete(int k) {
  Graph g(k);
  for (Vertex u = 0; u < k; ++u) {
    for (Vertex v = u + 1; v < k; ++v) g.add_edge(u, v);
  }
  return g;
}

int Graph::size() const {
  int total = 0;
  for (Row r : rows_) total += std::popcount(r);
  return total / 2;
}

Row Graph::vertex_mask() const {
  const int n = order();
  return n == 64 ? ~Row{0} : ((Row{1} << n) - 1);
}

void Graph::add_edge(Vertex u, Vertex v) {
  if (u == v || u < 0 || v < 0 || u >= order() || v >= order()) {
    throw DomainError("invalid edge " + std::to_string(u) + "-" +
                      std::to_string(v));
  }
  rows_[u] |= Row{1} << v;
  rows_[v] |= Row{1} << u;
}

void Graph::remove_edge(Vertex u, Vertex v) {
  rows_[u] &= ~(Row{1} << v);
  rows_[v] &= ~(Row{1} << u);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Vertex u = 0; u < order(); ++u) {
    Row higher = rows_[u] & ~((Row{2} << u) - 1);
    while (higher != 0) {
      const int v = std::countr_zero(higher);
      higher &= higher - 1;
      out.push_back({u, v});
    }
  }
  return out;
}

Graph Graph::relabeled(std::span<const Vertex> perm) const {
  Graph out(order());
  for (Vertex u = 0; u < order(); ++u) {
    Row r = rows_[u];
    Row mapped = 0;
    while (r != 0) {
      const int v = std::countr_zero(r);
      r &= r - 1;
      mapped |= Row{1} << perm[v];
    }
    out.rows_[perm[u]] = mapped;
  }
  return out;
}

Graph Graph::induced(Row mask) const {
  std::vector<Vertex> index(rows_.size(), -1);
  int k = 0;
  for (Vertex v = 0; v < order(); ++v) {
    if ((mask >> v) & 1U) index[v] = k++;
  }
  Graph out(k);
  for (Vertex u = 0; u < order(); ++u) {
    if (index[u] < 0) continue;
    Row r = rows_[u] & mask;
    while (r != 0) {
      const int v = std::countr_zero(r);
      r &= r - 1;
      out.rows_[index[u]] |= Row{1} << index[v];
    }
  }
  return out;
}

Graph complete_graph(int k) {
  if (k < 1) throw DomainError("complete_graph needs k >= 1");
  return Graph::complete(k);
}

int code_bits(int n) { return n * (n - 1) / 2; }

std::vector<std::uint64_t> packed_code(const Graph& g) {
  const int n = g.order();
  const int bits = code_bits(n);
  const int limbs = (bits + 63) / 64;
  std::vector<std::uint64_t> out(static_cast<std::size_t>(limbs), 0);
  // Bit at string position p carries weight 2^(bits-1-p).
  int p = 0;
  for (Vertex u = 0; u < n; ++u) {
    for (Vertex v = u + 1; v < n; ++v, ++p) {
      if (!g.has_edge(u, v)) continue;
      const int weight = bits - 1 - p;
      out[static_cast<std::size_t>(limbs - 1 - weight / 64)] |=
          std::uint64_t{1} << (weight % 64);
    }
  }
  return out;
}

BigInt unpack_code(std::span<const std::uint64_t> limbs) {
  BigInt x = 0;
  for (std::uint64_t limb : limbs) {
    x <<= 64;
    x |= limb;
  }
  return x;
}

BigInt encode_int(const Graph& g) { return unpack_code(packed_code(g)); }

Graph decode_int(const BigInt& x, int n) {
  if (n < 1 || n > Graph::kMaxVertices) {
    throw DomainError("cannot decode with n = " + std::to_string(n));
  }
  const int bits = code_bits(n);
  if (x < 0 || (x != 0 && static_cast<int>(boost::multiprecision::msb(x)) >= bits)) {
    throw DomainError("integer " + to_string(x) + " does not fit " +
                      std::to_string(bits) + " bits of an " + std::to_string(n) +
                      "-vertex graph");
  }
  Graph g(n);
  int p = 0;
  for (Vertex u = 0; u < n; ++u) {
    for (Vertex v = u + 1; v < n; ++v, ++p) {
      if (boost::multiprecision::bit_test(x, static_cast<unsigned>(bits - 1 - p))) {
        g.add_edge(u, v);
      }
    }
  }
  return g;
}

int infer_n(const BigInt& x) {
  if (x < 1) throw DomainError("infer_n needs a positive integer");
  const int length = static_cast<int>(boost::multiprecision::msb(x)) + 1;
  int n = 2;
  while (code_bits(n) < length) ++n;
  return n;
}

BigInt parse_bigint(const std::string& text) {
  if (text.empty() ||
      !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw UsageError("not a nonnegative decimal integer: '" + text + "'");
  }
  return BigInt(text);
}

std::string to_string(const BigInt& x) { return x.str(); }

LdpVector ldp(const Graph& g, Vertex v) {
  LdpVector out;
  const int d = g.degree(v);
  out.degree = d;
  if (d <= 1) return out;
  Row r = g.neighbors(v);
  double lo = 1e300;
  double hi = 0;
  double sum = 0;
  double sq = 0;
  while (r != 0) {
    const int u = std::countr_zero(r);
    r &= r - 1;
    const double du = g.degree(u);
    lo = std::min(lo, du);
    hi = std::max(hi, du);
    sum += du;
    sq += du * du;
  }
  out.min = lo;
  out.max = hi;
  out.mean = sum / d;
  out.std = std::sqrt(std::max(0.0, sq / d - out.mean * out.mean));
  return out;
}

int triangles_at(const Graph& g, Vertex v) {
  int twice = 0;
  Row r = g.neighbors(v);
  while (r != 0) {
    const int u = std::countr_zero(r);
    r &= r - 1;
    twice += std::popcount(g.neighbors(u) & g.neighbors(v));
  }
  return twice / 2;
}

double clustering(const Graph& g, Vertex v) {
  const int d = g.degree(v);
  if (d <= 1) return 0.0;
  return 2.0 * triangles_at(g, v) / (static_cast<double>(d) * (d - 1));
}

}  // namespace rigid

#include <doctest.h>

#include "rigid/structure.hpp"
#include "support.hpp"

using namespace rigid;

namespace {

Graph cycle(int n) {
  Graph g(n);
  for (int i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
  return g;
}

Graph petersen() {
  Graph g(10);
  for (int i = 0; i < 5; ++i) {
    g.add_edge(i, (i + 1) % 5);
    g.add_edge(i, i + 5);
    g.add_edge(5 + i, 5 + (i + 2) % 5);
  }
  return g;
}

}  // namespace

TEST_SUITE("structure") {
  TEST_CASE("small graphs") {
    const StructuralReport c5 = structural_report(cycle(5));
    CHECK(c5.min_degree == 2);
    CHECK(c5.max_degree == 2);
    CHECK(c5.triangle_free);
    CHECK_FALSE(c5.every_vertex_in_triangle);
    CHECK(c5.hamiltonian);
    CHECK(c5.chromatic_number == 3);
    CHECK(chromatic_number(cycle(6)) == 2);
    CHECK(chromatic_number(Graph::complete(5)) == 5);
    CHECK(chromatic_number(Graph(3)) == 1);
    const StructuralReport k4 = structural_report(Graph::complete(4));
    CHECK(k4.every_vertex_in_triangle);
    CHECK_FALSE(k4.triangle_free);
  }

  TEST_CASE("petersen graph is not hamiltonian") {
    const Graph p = petersen();
    CHECK_FALSE(is_hamiltonian(p));
    CHECK(chromatic_number(p) == 3);
    Graph q = p;
    q.add_edge(0, 7);
    CHECK(structural_report(q).degrees.back() == 4);
  }

  TEST_CASE("sphere certificates") {
    for (const auto& c : test::kSphereCertificates) {
      CAPTURE(c.code);
      const StructuralReport r = structural_report(test::decode(c));
      CHECK(r.min_degree == 3);
      CHECK(r.max_degree == 4);
      CHECK(r.hamiltonian);
      CHECK(r.chromatic_number == 3);
    }
    std::vector<bool> triangles;
    for (const auto& c : test::kSphereCertificates) {
      triangles.push_back(structural_report(test::decode(c)).every_vertex_in_triangle);
    }
    CHECK(triangles == std::vector<bool>{true, false, true, true, true});
  }

  TEST_CASE("nac certificates are triangle-free") {
    for (const auto& c : test::kNacCertificates) {
      CHECK(structural_report(test::decode(c)).triangle_free);
    }
  }

  TEST_CASE("report text") {
    const std::string text = to_string(structural_report(Graph::complete(3)));
    CHECK(text.find("min_degree 2\n") != std::string::npos);
    CHECK(text.find("chromatic_number 3\n") != std::string::npos);
    CHECK(text.find("hamiltonian true\n") != std::string::npos);
  }
}

#pragma once

#include <string>
#include <vector>

#include "rigid/graph.hpp"

namespace rigid {

struct StructuralReport {
  std::vector<int> degrees;  // sorted ascending
  int min_degree = 0;
  int max_degree = 0;
  bool triangle_free = true;
  bool every_vertex_in_triangle = false;
  bool hamiltonian = false;
  int chromatic_number = 0;
};

/// Limited to 20 vertices (exact Hamiltonicity and coloring searches).
StructuralReport structural_report(const Graph& g);

bool is_hamiltonian(const Graph& g);
int chromatic_number(const Graph& g);

std::string to_string(const StructuralReport& r);

}  // namespace rigid

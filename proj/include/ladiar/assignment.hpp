#pragma once

#include "ladiar/core.hpp"

#include <vector>

namespace ladiar {

struct Assignment {
  /// row_to_col[i] is the column assigned to row i.
  std::vector<int> row_to_col;
  double cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column (rows <= cols),
/// shortest augmenting path with potentials, O(n^2 m).
Assignment SolveAssignment(const Matrix& cost);

}  // namespace ladiar

#include "ladiar/assignment.hpp"

#include <limits>

namespace ladiar {

Assignment SolveAssignment(const Matrix& cost) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  Require(n <= m, ErrorCode::kInvalidArgument,
          "assignment needs rows <= cols (" + std::to_string(n) + " > " + std::to_string(m) + ")");
  Require(cost.allFinite(), ErrorCode::kInvalidArgument, "assignment cost must be finite");
  Assignment out;
  out.row_to_col.assign(static_cast<size_t>(n), -1);
  if (n == 0) return out;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based internals; index 0 is the virtual root.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<Index> match(m + 1, 0), way(m + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = match[j0];
      double delta = kInf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (Index j = 1; j <= m; ++j) {
    if (match[j] != 0) out.row_to_col[static_cast<size_t>(match[j] - 1)] = static_cast<int>(j - 1);
  }
  for (Index i = 0; i < n; ++i) out.cost += cost(i, out.row_to_col[static_cast<size_t>(i)]);
  return out;
}

}  // namespace ladiar

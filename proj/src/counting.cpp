#include "ladiar/counting.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>

namespace ladiar {

namespace {

// Eigenvalues within this (relative) distance of zero are treated as zero, and
// within this distance below one still pass the lambda >= 1 filter. A block
// of identical vectors yields eigenvalues that are exact integers in theory
// but land a few ulps off after the solve.
constexpr double kSpectrumTol = 1e-9;

// Ratios closer than this are ties.
constexpr double kTieTol = 1e-12;

}  // namespace

double CosineSim(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) {
  Require(u.size() == v.size(), ErrorCode::kDimensionMismatch, "cosine similarity size mismatch");
  const double nu = u.norm();
  const double nv = v.norm();
  Require(nu > 0.0 && nv > 0.0, ErrorCode::kInvalidArgument,
          "cosine similarity of a zero-norm vector");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

namespace {

AffinityMatrix BuildAffinity(const ConvertedVectorPool& pool, AffinityKind kind,
                             const std::function<double(Index, Index, double)>& entry) {
  const Index n = pool.size();
  Require(static_cast<Index>(pool.origin.size()) == n, ErrorCode::kDimensionMismatch,
          "pool origin count differs from column count");
  Matrix unit(pool.columns.rows(), n);
  for (Index i = 0; i < n; ++i) {
    const double norm = pool.columns.col(i).norm();
    Require(norm > 0.0, ErrorCode::kInvalidArgument,
            "converted vector " + std::to_string(i) + " has zero norm");
    unit.col(i) = pool.columns.col(i) / norm;
  }
  AffinityMatrix out{Matrix::Identity(n, n), kind};
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double sim = std::clamp(unit.col(i).dot(unit.col(j)), -1.0, 1.0);
      out.data(i, j) = out.data(j, i) = entry(i, j, sim);
    }
  }
  return out;
}

}  // namespace

AffinityMatrix BuildRawAffinity(const ConvertedVectorPool& pool) {
  return BuildAffinity(pool, AffinityKind::kRaw, [](Index, Index, double sim) { return sim; });
}

AffinityMatrix BuildModifiedAffinity(const ConvertedVectorPool& pool, double margin) {
  Require(margin >= 0.0 && margin < 1.0, ErrorCode::kInvalidArgument, "margin must lie in [0, 1)");
  Require(pool.size() >= 1, ErrorCode::kInvalidArgument, "modified affinity of an empty pool");
  return BuildAffinity(pool, AffinityKind::kModified, [&](Index i, Index j, double sim) {
    if (pool.origin[static_cast<size_t>(i)].subsequence ==
        pool.origin[static_cast<size_t>(j)].subsequence) {
      return 0.0;
    }
    return std::max(sim - margin, 0.0) / (1.0 - margin);
  });
}

EigenSpectrum EigvalsDesc(const AffinityMatrix& m) {
  const Matrix& a = m.data;
  Require(a.rows() == a.cols(), ErrorCode::kDimensionMismatch, "affinity matrix must be square");
  EigenSpectrum out;
  if (a.rows() == 0) return out;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  Require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale, ErrorCode::kInvalidArgument,
          "affinity matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  Require(solver.info() == Eigen::Success, ErrorCode::kInvalidArgument,
          "symmetric eigenvalue solve failed");
  const Vector& ev = solver.eigenvalues();  // ascending
  out.values.assign(ev.data(), ev.data() + ev.size());
  std::reverse(out.values.begin(), out.values.end());
  return out;
}

int CountEigenratio(const EigenSpectrum& spectrum) {
  const auto& lam = spectrum.values;
  const int n = static_cast<int>(lam.size());
  if (n < 2) return n;
  const double zero = kSpectrumTol * std::max(1.0, std::abs(lam.front()));
  auto clean = [&](double v) { return v <= zero ? 0.0 : v; };

  int best = 1;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (int s = 1; s < n; ++s) {
    const double den = clean(lam[static_cast<size_t>(s - 1)]);
    const double num = clean(lam[static_cast<size_t>(s)]);
    // Descending order means den == 0 implies num == 0.
    const double ratio = den == 0.0 ? 1.0 : num / den;
    if (ratio < best_ratio - kTieTol) {
      best_ratio = ratio;
      best = s;
    }
  }
  return best;
}

int CountEigenratioFiltered(const EigenSpectrum& spectrum) {
  const auto& lam = spectrum.values;
  const int n = static_cast<int>(lam.size());
  int best = 0;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (int s = 1; s <= n; ++s) {
    const double den = lam[static_cast<size_t>(s - 1)];
    if (den < 1.0 - kSpectrumTol) continue;
    const double next = s < n ? lam[static_cast<size_t>(s)] : 0.0;
    const double num = next <= kSpectrumTol * den ? 0.0 : next;
    const double ratio = num / den;
    if (ratio < best_ratio - kTieTol) {
      best_ratio = ratio;
      best = s;
    }
  }
  return best == 0 ? 1 : best;
}

int ApplyCountFloor(int count, std::span<const int> local_counts) {
  Require(!local_counts.empty(), ErrorCode::kInvalidArgument, "count floor needs local counts");
  return std::max(count, *std::max_element(local_counts.begin(), local_counts.end()));
}

}  // namespace ladiar

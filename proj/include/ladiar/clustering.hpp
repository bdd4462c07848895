#pragma once

#include "ladiar/core.hpp"

#include <cstdint>
#include <vector>

namespace ladiar {

/// Groups of pool columns that must end up in pairwise distinct clusters.
struct CannotLinkSet {
  std::vector<std::vector<Index>> groups;

  /// One group per subsequence that contributed at least one column.
  static CannotLinkSet FromPool(const ConvertedVectorPool& pool);
  Index max_group_size() const;
};

struct ClusterAssignment {
  std::vector<int> labels;  // per pool column, in [0, k)
  Matrix centroids;         // D x k
  double inertia = 0.0;
  /// Objective after every assignment step, then the final value with the
  /// converged centroids. Non-increasing.
  std::vector<double> inertia_trace;
  int iterations = 0;
};

struct KMeansOptions {
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;
};

/// Cannot-link constrained k-means on length-normalised columns of `vectors`
/// (D x N). Each cannot-link group is assigned jointly by a minimum-cost
/// matching of its members to distinct clusters, so a solution exists whenever
/// k >= the largest group. Seeding is distance-weighted (k-means++).
ClusterAssignment ClcKmeans(const Matrix& vectors, int k, const CannotLinkSet& links,
                            const KMeansOptions& options = {});

/// Writes each subsequence's local posterior columns into the global columns
/// chosen by `labels` (pool order: subsequence-major). Cells no local speaker
/// maps to are set to kProbEpsilon.
DiarizationResult Stitch(const std::vector<PosteriorMatrix>& local, const std::vector<int>& labels,
                         const SubsequencePartition& partition, int k, double activity_threshold,
                         double frame_duration);

}  // namespace ladiar

#pragma once

#include "ladiar/core.hpp"

#include <span>
#include <vector>

namespace ladiar {

enum class AffinityKind { kRaw, kModified };

/// Symmetric S* x S* affinity between converted vectors.
struct AffinityMatrix {
  Matrix data;
  AffinityKind kind = AffinityKind::kRaw;
};

/// Eigenvalues in non-increasing order.
struct EigenSpectrum {
  std::vector<double> values;
};

/// Cosine similarity clamped to [-1, 1]. Throws on a zero-norm input.
double CosineSim(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v);

/// r_ij = sim(b_i, b_j).
AffinityMatrix BuildRawAffinity(const ConvertedVectorPool& pool);

/// r'_ij = 1 on the diagonal, 0 between distinct vectors of one subsequence,
/// [sim - margin]_+ / (1 - margin) otherwise.
AffinityMatrix BuildModifiedAffinity(const ConvertedVectorPool& pool, double margin);

/// Symmetric eigenvalue solve. Rejects matrices whose asymmetry exceeds 1e-9
/// relative to their largest entry.
EigenSpectrum EigvalsDesc(const AffinityMatrix& m);

/// argmin_{1<=s<=S*-1} lambda_{s+1} / lambda_s over a non-negative spectrum.
/// 0/0 counts as 1, ties go to the smallest s. S* < 2 returns S*.
int CountEigenratio(const EigenSpectrum& spectrum);

/// Eigenratio count restricted to s with lambda_s >= 1, with lambda_{S*+1} = 0
/// appended so that s = S* is a candidate. Negative numerators count as 0.
/// Returns 1 when no eigenvalue reaches 1.
int CountEigenratioFiltered(const EigenSpectrum& spectrum);

/// max(count, max_l local_counts[l]).
int ApplyCountFloor(int count, std::span<const int> local_counts);

}  // namespace ladiar

#pragma once

#include "ladiar/core.hpp"

#include <span>
#include <vector>

namespace ladiar {

/// Reference implementations of the training objectives. Values only, no
/// gradients: these are used to validate providers and as test oracles.

/// Binary cross entropy with p clamped to [eps, 1 - eps].
double Bce(int label, double p);

/// Mean BCE over S+1 existence probabilities; the first S are targets 1, the
/// last is target 0.
double ExistenceLoss(std::span<const double> probs, int speakers);

enum class DiarLossMode { kExhaustive, kAssignment };

struct DiarLossResult {
  double loss = 0.0;
  /// permutation[s] is the reference column matched to posterior column s.
  std::vector<int> permutation;
};

/// Permutation-free diarization loss: minimum over speaker permutations of
/// the mean BCE. Exhaustive mode enumerates all S! permutations (S <= 10);
/// assignment mode builds the S x S BCE cost matrix and solves it.
DiarLossResult DiarizationLoss(const PosteriorMatrix& posteriors, const ActivityMatrix& labels,
                               DiarLossMode mode = DiarLossMode::kAssignment);

/// Mean BCE with a fixed column mapping.
double DiarizationLossAt(const PosteriorMatrix& posteriors, const ActivityMatrix& labels,
                         std::span<const int> permutation);

/// Speaker identity per pool column.
struct SpeakerCorrespondence {
  std::vector<int> labels;

  int distinct_speakers() const;
  /// Builds labels from per-subsequence optimal permutations: column j of
  /// subsequence l gets speaker_ids[l][permutations[l][j]].
  static SpeakerCorrespondence FromPermutations(
      const std::vector<std::vector<int>>& permutations,
      const std::vector<std::vector<int>>& speaker_ids);
};

/// Contrastive pairwise loss over all ordered pairs (i, j) of converted
/// vectors, weighted by 1 / (S^2 c_i c_j). `speakers <= 0` means "number of
/// distinct labels".
double PairwiseLoss(const Matrix& converted, const SpeakerCorrespondence& corr, int speakers,
                    double margin);

struct LossBreakdown {
  double diar = 0.0;
  double exist = 0.0;
  double pair = 0.0;
  double global_total = 0.0;
  double local_total = 0.0;
  double both_total = 0.0;
  double alpha = 1.0;
  double gamma = 1.0;
};

/// global = diar + alpha*exist;
/// local  = mean_l(diar_l + alpha*exist_l) + gamma*pair;
/// both   = local + global.
LossBreakdown CombineLosses(double diar, double exist, double pair, double alpha, double gamma,
                            std::span<const double> local_diar,
                            std::span<const double> local_exist);

}  // namespace ladiar

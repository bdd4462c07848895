#include "ladiar/losses.hpp"

#include "ladiar/assignment.hpp"
#include "ladiar/counting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace ladiar {

double Bce(int label, double p) {
  const double q = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
  return label != 0 ? -std::log(q) : -std::log1p(-q);
}

double ExistenceLoss(std::span<const double> probs, int speakers) {
  Require(speakers >= 0, ErrorCode::kInvalidArgument, "speaker count must be >= 0");
  Require(probs.size() == static_cast<size_t>(speakers) + 1, ErrorCode::kDimensionMismatch,
          "existence loss needs S+1 = " + std::to_string(speakers + 1) + " probabilities, got " +
              std::to_string(probs.size()));
  double sum = 0.0;
  for (size_t s = 0; s < probs.size(); ++s) {
    sum += Bce(static_cast<int>(s) < speakers ? 1 : 0, probs[s]);
  }
  return sum / static_cast<double>(probs.size());
}

namespace {

void CheckShapes(const PosteriorMatrix& p, const ActivityMatrix& y) {
  Require(p.frames() == y.frames() && p.speakers() == y.speakers(),
          ErrorCode::kDimensionMismatch,
          "posterior shape " + std::to_string(p.frames()) + "x" + std::to_string(p.speakers()) +
              " differs from label shape " + std::to_string(y.frames()) + "x" +
              std::to_string(y.speakers()));
  Require(p.speakers() == 0 || p.frames() >= 1, ErrorCode::kInvalidArgument,
          "diarization loss needs at least one frame");
}

}  // namespace

double DiarizationLossAt(const PosteriorMatrix& posteriors, const ActivityMatrix& labels,
                         std::span<const int> permutation) {
  CheckShapes(posteriors, labels);
  const Index t_count = posteriors.frames();
  const Index s_count = posteriors.speakers();
  Require(static_cast<Index>(permutation.size()) == s_count, ErrorCode::kDimensionMismatch,
          "permutation length differs from speaker count");
  if (s_count == 0) return 0.0;
  double sum = 0.0;
  for (Index t = 0; t < t_count; ++t) {
    for (Index s = 0; s < s_count; ++s) {
      sum += Bce(labels.data()(t, permutation[static_cast<size_t>(s)]), posteriors.data(t, s));
    }
  }
  return sum / static_cast<double>(t_count * s_count);
}

DiarLossResult DiarizationLoss(const PosteriorMatrix& posteriors, const ActivityMatrix& labels,
                               DiarLossMode mode) {
  CheckShapes(posteriors, labels);
  const Index s_count = posteriors.speakers();
  DiarLossResult out;
  if (s_count == 0) return out;

  if (mode == DiarLossMode::kExhaustive) {
    Require(s_count <= 10, ErrorCode::kInvalidArgument,
            "exhaustive diarization loss is limited to 10 speakers");
    std::vector<int> perm(static_cast<size_t>(s_count));
    std::iota(perm.begin(), perm.end(), 0);
    out.loss = std::numeric_limits<double>::infinity();
    do {
      const double l = DiarizationLossAt(posteriors, labels, perm);
      if (l < out.loss) {
        out.loss = l;
        out.permutation = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
  }

  // cost(s, r): BCE sum of posterior column s against label column r.
  const Index t_count = posteriors.frames();
  Matrix cost = Matrix::Zero(s_count, s_count);
  for (Index s = 0; s < s_count; ++s) {
    for (Index r = 0; r < s_count; ++r) {
      double c = 0.0;
      for (Index t = 0; t < t_count; ++t) c += Bce(labels.data()(t, r), posteriors.data(t, s));
      cost(s, r) = c;
    }
  }
  Assignment a = SolveAssignment(cost);
  out.permutation = std::move(a.row_to_col);
  out.loss = a.cost / static_cast<double>(t_count * s_count);
  return out;
}

int SpeakerCorrespondence::distinct_speakers() const {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

SpeakerCorrespondence SpeakerCorrespondence::FromPermutations(
    const std::vector<std::vector<int>>& permutations,
    const std::vector<std::vector<int>>& speaker_ids) {
  Require(permutations.size() == speaker_ids.size(), ErrorCode::kDimensionMismatch,
          "one permutation per subsequence is required");
  SpeakerCorrespondence corr;
  for (size_t l = 0; l < permutations.size(); ++l) {
    for (int r : permutations[l]) {
      Require(r >= 0 && static_cast<size_t>(r) < speaker_ids[l].size(),
              ErrorCode::kInvalidArgument, "permutation entry out of range");
      corr.labels.push_back(speaker_ids[l][static_cast<size_t>(r)]);
    }
  }
  return corr;
}

double PairwiseLoss(const Matrix& converted, const SpeakerCorrespondence& corr, int speakers,
                    double margin) {
  const Index n = converted.cols();
  Require(static_cast<Index>(corr.labels.size()) == n, ErrorCode::kDimensionMismatch,
          "correspondence label count differs from pool size");
  Require(margin >= 0.0 && margin < 1.0, ErrorCode::kInvalidArgument, "margin must lie in [0, 1)");
  if (n == 0) return 0.0;
  const int s = speakers > 0 ? speakers : corr.distinct_speakers();
  std::map<int, int> counts;
  for (int l : corr.labels) ++counts[l];
  const double s2 = static_cast<double>(s) * s;

  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int li = corr.labels[static_cast<size_t>(i)];
    for (Index j = 0; j < n; ++j) {
      const int lj = corr.labels[static_cast<size_t>(j)];
      const double sim = CosineSim(converted.col(i), converted.col(j));
      const double term = li == lj ? 1.0 - sim : std::max(sim - margin, 0.0);
      sum += term / (s2 * counts[li] * counts[lj]);
    }
  }
  return sum;
}

LossBreakdown CombineLosses(double diar, double exist, double pair, double alpha, double gamma,
                            std::span<const double> local_diar,
                            std::span<const double> local_exist) {
  Require(std::isfinite(alpha) && std::isfinite(gamma), ErrorCode::kInvalidArgument,
          "loss weights must be finite");
  Require(local_diar.size() == local_exist.size(), ErrorCode::kDimensionMismatch,
          "per-subsequence loss lists must be aligned");
  LossBreakdown b;
  b.diar = diar;
  b.exist = exist;
  b.pair = pair;
  b.alpha = alpha;
  b.gamma = gamma;
  b.global_total = diar + alpha * exist;
  double mean = 0.0;
  for (size_t l = 0; l < local_diar.size(); ++l) mean += local_diar[l] + alpha * local_exist[l];
  if (!local_diar.empty()) mean /= static_cast<double>(local_diar.size());
  b.local_total = mean + gamma * pair;
  b.both_total = b.local_total + b.global_total;
  return b;
}

}  // namespace ladiar

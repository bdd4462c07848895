#include "ladiar/simulator.hpp"

#include "ladiar/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ladiar {

void SimulationConfig::validate() const {
  Require(speakers >= 0, ErrorCode::kInvalidArgument, "speaker count must be >= 0");
  Require(frames >= 1, ErrorCode::kInvalidArgument, "duration must cover at least one frame");
  Require(frame_duration > 0.0, ErrorCode::kInvalidArgument, "frame_duration must be positive");
  Require(beta > 0.0, ErrorCode::kInvalidArgument, "beta must be positive");
  Require(utt_min > 0.0 && utt_min <= utt_max, ErrorCode::kInvalidArgument,
          "utterance bounds must satisfy 0 < utt_min <= utt_max");
  Require(sigma >= 0.0, ErrorCode::kInvalidArgument, "sigma must be >= 0");
  Require(kappa > 0.0, ErrorCode::kInvalidArgument, "kappa must be positive");
  Require(dim >= speakers + 1, ErrorCode::kInvalidArgument,
          "dimension must exceed the speaker count (one axis is reserved for the bias feature)");
}

double SilenceMeanForSpeakers(int speakers) {
  static constexpr double kTable[] = {2.0, 2.0, 5.0, 9.0, 13.0, 17.0};
  if (speakers <= 1) return kTable[0];
  if (speakers <= 6) return kTable[speakers - 1];
  return kTable[5] + 4.0 * (speakers - 6);
}

ActivityMatrix GenActivity(const SimulationConfig& cfg) {
  cfg.validate();
  ActivityMatrix act(cfg.frames, cfg.speakers);
  Rng master(cfg.seed);
  const double duration = static_cast<double>(cfg.frames) * cfg.frame_duration;
  for (int s = 0; s < cfg.speakers; ++s) {
    Rng rng(master.Fork());
    double t = 0.0;
    while (true) {
      t += rng.Exponential(cfg.beta);
      if (t >= duration) break;
      const double len = rng.Uniform(cfg.utt_min, cfg.utt_max);
      const Index on = static_cast<Index>(std::llround(t / cfg.frame_duration));
      const Index off = std::min<Index>(
          static_cast<Index>(std::llround((t + len) / cfg.frame_duration)), cfg.frames);
      for (Index f = on; f < off; ++f) act.set(f, s, true);
      t += len;
    }
  }
  return act;
}

double OverlapRatio(const ActivityMatrix& activity) {
  Index speech = 0;
  Index overlap = 0;
  for (Index t = 0; t < activity.frames(); ++t) {
    const int n = activity.data().row(t).sum();
    if (n >= 1) ++speech;
    if (n >= 2) ++overlap;
  }
  return speech == 0 ? 0.0 : 100.0 * static_cast<double>(overlap) / static_cast<double>(speech);
}

SpeakerGeometry PlantDirections(int speakers, Index dim, std::uint64_t seed) {
  Require(speakers >= 0 && dim >= speakers + 1, ErrorCode::kInvalidArgument,
          "dimension must exceed the speaker count");
  // Random rotation: QR of a Gaussian matrix, signs fixed by R's diagonal.
  Rng rng(seed);
  Matrix gauss(dim, dim);
  for (Index c = 0; c < dim; ++c) {
    for (Index r = 0; r < dim; ++r) gauss(r, c) = rng.Normal();
  }
  const Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix& r = qr.matrixQR();
  for (Index c = 0; c < dim; ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  SpeakerGeometry g;
  g.directions = q.leftCols(speakers);
  g.bias = q.col(speakers);
  return g;
}

FrameEmbeddingMatrix GenEmbeddings(const ActivityMatrix& activity, const SpeakerGeometry& geometry,
                                   double sigma, double kappa, double frame_duration,
                                   std::uint64_t seed) {
  const Index dim = geometry.directions.rows();
  Require(geometry.directions.cols() == activity.speakers(), ErrorCode::kDimensionMismatch,
          "activity speaker count differs from planted directions");
  Require(geometry.bias.size() == dim, ErrorCode::kDimensionMismatch, "bias axis size mismatch");
  Rng rng(seed);
  Matrix e(activity.frames(), dim);
  Vector noise(dim);
  for (Index t = 0; t < activity.frames(); ++t) {
    for (Index d = 0; d < dim; ++d) noise(d) = rng.Normal();
    noise -= noise.dot(geometry.bias) * geometry.bias;
    Vector v = Vector::Zero(dim);
    bool any = false;
    for (Index s = 0; s < activity.speakers(); ++s) {
      if (activity.active(t, s)) {
        v += geometry.directions.col(s);
        any = true;
      }
    }
    if (any) {
      v += sigma * noise;
      v.normalize();
    } else {
      v = sigma * noise;
    }
    e.row(t) = (kappa * (v + geometry.bias)).transpose();
  }
  return FrameEmbeddingMatrix(std::move(e), frame_duration);
}

GroundTruth Simulate(const SimulationConfig& cfg) {
  cfg.validate();
  Rng streams(cfg.seed ^ 0x5eed5eed5eed5eedULL);
  const std::uint64_t dir_seed = streams.Fork();
  const std::uint64_t emb_seed = streams.Fork();
  ActivityMatrix act = GenActivity(cfg);
  SpeakerGeometry geom = PlantDirections(cfg.speakers, cfg.dim, dir_seed);
  FrameEmbeddingMatrix emb =
      GenEmbeddings(act, geom, cfg.sigma, cfg.kappa, cfg.frame_duration, emb_seed);
  return GroundTruth{std::move(act), std::move(geom), std::move(emb)};
}

std::vector<Segment> ActivitySegments(const ActivityMatrix& activity, double frame_duration) {
  return Binarize(PosteriorMatrix{activity.as_real()}, 0.5, frame_duration);
}

int ActiveSpeakerCount(const ActivityMatrix& activity) {
  int n = 0;
  for (Index s = 0; s < activity.speakers(); ++s) {
    if (activity.data().col(s).any()) ++n;
  }
  return n;
}

std::vector<int> ActiveSpeakersPerSubsequence(const ActivityMatrix& activity,
                                              const SubsequencePartition& partition) {
  Require(partition.frames() == activity.frames(), ErrorCode::kDimensionMismatch,
          "partition does not cover the activity matrix");
  std::vector<int> out;
  for (Index l = 0; l < partition.count(); ++l) {
    out.push_back(ActiveSpeakerCount(
        ActivityMatrix(activity.as_real().middleRows(partition.begin(l), partition.length(l)))));
  }
  return out;
}

namespace {

// Speakers active in [begin, end), most active first, at most `cap`.
std::vector<int> EmittedSpeakers(const ActivityMatrix& act, Index begin, Index end,
                                 std::optional<int> cap) {
  std::vector<std::pair<int, int>> counts;  // (frames, speaker)
  for (Index s = 0; s < act.speakers(); ++s) {
    const int n = act.data().col(s).segment(begin, end - begin).sum();
    if (n > 0) counts.emplace_back(n, static_cast<int>(s));
  }
  std::stable_sort(counts.begin(), counts.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (cap && static_cast<int>(counts.size()) > *cap) counts.resize(static_cast<size_t>(*cap));
  std::vector<int> out;
  for (const auto& c : counts) out.push_back(c.second);
  return out;
}

}  // namespace

OracleOutput OracleProvide(const GroundTruth& gt, const SubsequencePartition& partition,
                           const OracleOptions& options) {
  Require(partition.frames() == gt.activity.frames(), ErrorCode::kDimensionMismatch,
          "partition does not match the recording length");
  Require(!options.cap || *options.cap >= 0, ErrorCode::kInvalidArgument, "cap must be >= 0");
  Require(options.sigma_attr >= 0.0, ErrorCode::kInvalidArgument, "sigma_attr must be >= 0");
  Require(options.attractor_scale > 0.0 && options.attractor_scale < 1.0,
          ErrorCode::kInvalidArgument, "attractor scale must lie in (0, 1)");
  Require(options.bias_fraction > 0.0 && options.bias_fraction < 1.0, ErrorCode::kInvalidArgument,
          "bias fraction must lie in (0, 1)");
  Require(options.existence >= 0.5 && options.existence < 1.0, ErrorCode::kInvalidArgument,
          "oracle existence probability must lie in [0.5, 1)");

  const SpeakerGeometry& g = gt.geometry;
  const Index dim = g.directions.rows();
  auto attractor = [&](int s) -> Vector {
    return options.attractor_scale * (g.directions.col(s) - options.bias_fraction * g.bias);
  };

  OracleOutput out;
  Rng rng(options.seed);

  out.global_speakers = EmittedSpeakers(gt.activity, 0, gt.activity.frames(), options.cap);
  const Index ng = static_cast<Index>(out.global_speakers.size());
  out.provider.global_attractors.resize(dim, ng);
  for (Index j = 0; j < ng; ++j) {
    out.provider.global_attractors.col(j) = attractor(out.global_speakers[static_cast<size_t>(j)]);
  }
  out.provider.global_existence.assign(static_cast<size_t>(ng), options.existence);

  for (Index l = 0; l < partition.count(); ++l) {
    std::vector<int> who =
        EmittedSpeakers(gt.activity, partition.begin(l), partition.end(l), options.cap);
    const Index n = static_cast<Index>(who.size());
    LocalAttractorSet set;
    set.subsequence_id = l;
    set.attractors.resize(dim, n);
    set.converted.resize(dim, n);
    for (Index j = 0; j < n; ++j) {
      const int s = who[static_cast<size_t>(j)];
      set.attractors.col(j) = attractor(s);
      Vector b = g.directions.col(s);
      for (Index d = 0; d < dim; ++d) b(d) += options.sigma_attr * rng.Normal();
      set.converted.col(j) = b;
    }
    set.existence.assign(static_cast<size_t>(n), options.existence);
    out.provider.local.push_back(std::move(set));
    out.local_speakers.push_back(std::move(who));
  }
  return out;
}

ProviderOutput OracleAttractorProvider::Provide(const FrameEmbeddingMatrix& embeddings,
                                                const SubsequencePartition& partition) const {
  Require(embeddings.frames() == gt_.activity.frames(), ErrorCode::kDimensionMismatch,
          "oracle provider was built for a different recording");
  return OracleProvide(gt_, partition, options_).provider;
}

}  // namespace ladiar

#pragma once

#include "ladiar/core.hpp"
#include "ladiar/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ladiar {

/// Synthetic conversations with planted speaker geometry.
///
/// Activity: every speaker independently alternates exponential silences
/// (mean beta) and uniform utterances, starting with a silence.
///
/// Geometry: speaker directions are the first S columns of a seeded random
/// rotation of R^D and the next column is reserved as a constant "bias"
/// feature u0, so D must exceed the speaker count. A frame with active set W has embedding
///   e_t = kappa * (normalize(sum_{s in W} dir_s + sigma n) + u0)
/// and a silent frame e_t = kappa * (sigma n + u0), with the noise n kept out
/// of u0. Oracle attractors a_s = rho * (dir_s - theta * u0) then give
/// e_t . a_s = kappa * rho * (v_t . dir_s - theta): positive for active
/// speakers (v_t . dir_s = 1/sqrt|W|), negative otherwise.
struct SimulationConfig {
  int speakers = 2;
  Index frames = 3000;
  double frame_duration = 0.1;
  double beta = 2.0;      // mean silence, seconds
  double utt_min = 1.0;   // seconds
  double utt_max = 4.0;   // seconds
  double sigma = 0.05;    // embedding noise std
  Index dim = 16;
  double kappa = 8.0;     // embedding gain (posterior sharpness)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mean silence used for an S-speaker mixture: 2, 2, 5, 9, 13, 17 for
/// S = 1..6, continued in steps of 4.
double SilenceMeanForSpeakers(int speakers);

struct SpeakerGeometry {
  Matrix directions;  // D x S, orthonormal
  Vector bias;        // D, unit, orthogonal to every direction
};

struct GroundTruth {
  ActivityMatrix activity;
  SpeakerGeometry geometry;
  FrameEmbeddingMatrix embeddings;
};

ActivityMatrix GenActivity(const SimulationConfig& cfg);

/// 100 * (frames with >= 2 speakers) / (frames with >= 1 speaker); 0 if silent.
double OverlapRatio(const ActivityMatrix& activity);

SpeakerGeometry PlantDirections(int speakers, Index dim, std::uint64_t seed);

FrameEmbeddingMatrix GenEmbeddings(const ActivityMatrix& activity, const SpeakerGeometry& geometry,
                                   double sigma, double kappa, double frame_duration,
                                   std::uint64_t seed);

GroundTruth Simulate(const SimulationConfig& cfg);

/// Ground-truth segments (one per maximal activity run).
std::vector<Segment> ActivitySegments(const ActivityMatrix& activity, double frame_duration);

/// Number of speakers with at least one active frame.
int ActiveSpeakerCount(const ActivityMatrix& activity);

/// Distinct active speakers per subsequence.
std::vector<int> ActiveSpeakersPerSubsequence(const ActivityMatrix& activity,
                                              const SubsequencePartition& partition);

struct OracleOptions {
  std::optional<int> cap;          // max attractors per subsequence and globally
  double sigma_attr = 0.05;        // jitter on converted vectors
  std::uint64_t seed = 0;
  double attractor_scale = 0.95;   // rho
  double bias_fraction = 0.25;     // theta
  double existence = 0.99;
};

struct OracleOutput {
  ProviderOutput provider;
  /// True speaker index behind every emitted column.
  std::vector<int> global_speakers;
  std::vector<std::vector<int>> local_speakers;
};

/// Emits one attractor per truly active speaker (most active first, truncated
/// to `cap`), for every subsequence and for the whole recording. Converted
/// vectors are dir_s plus sigma_attr Gaussian jitter.
OracleOutput OracleProvide(const GroundTruth& gt, const SubsequencePartition& partition,
                           const OracleOptions& options);

class OracleAttractorProvider final : public AttractorProvider {
 public:
  OracleAttractorProvider(GroundTruth gt, OracleOptions options)
      : gt_(std::move(gt)), options_(options) {}

  ProviderOutput Provide(const FrameEmbeddingMatrix& embeddings,
                         const SubsequencePartition& partition) const override;

 private:
  GroundTruth gt_;
  OracleOptions options_;
};

}  // namespace ladiar

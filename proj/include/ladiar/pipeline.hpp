#pragma once

#include "ladiar/core.hpp"

#include <cstdint>
#include <vector>

namespace ladiar {

/// What an attractor model hands to inference: global attractors over the
/// whole recording and one local attractor set per subsequence. How they were
/// computed is up to the provider.
struct ProviderOutput {
  Matrix global_attractors;              // D x S_g
  std::vector<double> global_existence;  // accepted probabilities, one per column
  std::vector<LocalAttractorSet> local;  // one per subsequence, in order

  int global_count() const noexcept { return static_cast<int>(global_attractors.cols()); }
  void validate(Index dim) const;
};

class AttractorProvider {
 public:
  virtual ~AttractorProvider() = default;
  virtual ProviderOutput Provide(const FrameEmbeddingMatrix& embeddings,
                                 const SubsequencePartition& partition) const = 0;
};

struct PipelineConfig {
  Index subseq_len = 50;
  double margin = 0.5;
  int switch_threshold = 4;
  double activity_threshold = 0.5;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;

  void validate() const;
};

enum class InferenceMode { kGlobal, kLocal, kSwitch };

/// Posteriors from the global attractors; speaker count = number of global
/// attractors.
DiarizationResult InferGlobal(const FrameEmbeddingMatrix& embeddings,
                              const ProviderOutput& provider, const PipelineConfig& cfg);

/// Per-subsequence posteriors, modified-affinity eigenratio count with the
/// local-count floor, cannot-link clustering of converted vectors, stitching.
DiarizationResult InferLocal(const FrameEmbeddingMatrix& embeddings, const ProviderOutput& provider,
                             const PipelineConfig& cfg);

/// Global inference when the global count is below cfg.switch_threshold,
/// local inference otherwise.
DiarizationResult InferSwitch(const FrameEmbeddingMatrix& embeddings,
                              const ProviderOutput& provider, const PipelineConfig& cfg);

DiarizationResult Infer(InferenceMode mode, const FrameEmbeddingMatrix& embeddings,
                        const ProviderOutput& provider, const PipelineConfig& cfg);

}  // namespace ladiar

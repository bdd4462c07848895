#include "ladiar/pipeline.hpp"

#include "ladiar/clustering.hpp"
#include "ladiar/counting.hpp"

namespace ladiar {

void ProviderOutput::validate(Index dim) const {
  Require(static_cast<Index>(global_existence.size()) == global_attractors.cols(),
          ErrorCode::kDimensionMismatch, "global existence count differs from attractor count");
  if (global_attractors.cols() > 0) {
    Require(global_attractors.rows() == dim, ErrorCode::kDimensionMismatch,
            "global attractor dimension does not match embeddings");
  }
  for (double p : global_existence) {
    Require(p >= 0.5 && p < 1.0, ErrorCode::kInvalidArgument,
            "accepted existence probabilities must lie in [0.5, 1)");
  }
  for (const auto& set : local) set.validate(dim);
}

void PipelineConfig::validate() const {
  Require(subseq_len >= 1, ErrorCode::kInvalidArgument, "subsequence length must be >= 1");
  Require(margin >= 0.0 && margin < 1.0, ErrorCode::kInvalidArgument, "margin must lie in [0, 1)");
  Require(switch_threshold >= 1, ErrorCode::kInvalidArgument, "switch threshold must be >= 1");
  Require(activity_threshold > 0.0 && activity_threshold < 1.0, ErrorCode::kInvalidArgument,
          "activity threshold must lie in (0, 1)");
}

DiarizationResult InferGlobal(const FrameEmbeddingMatrix& embeddings,
                              const ProviderOutput& provider, const PipelineConfig& cfg) {
  cfg.validate();
  DiarizationResult out;
  out.branch = Branch::kGlobal;
  out.posteriors = ActivityPosteriors(embeddings, provider.global_attractors);
  out.speaker_count = provider.global_count();
  out.segments = Binarize(out.posteriors, cfg.activity_threshold, embeddings.frame_duration());
  return out;
}

DiarizationResult InferLocal(const FrameEmbeddingMatrix& embeddings, const ProviderOutput& provider,
                             const PipelineConfig& cfg) {
  cfg.validate();
  const SubsequencePartition partition = PartitionFrames(embeddings.frames(), cfg.subseq_len);
  Require(static_cast<Index>(provider.local.size()) == partition.count(),
          ErrorCode::kDimensionMismatch,
          "provider has " + std::to_string(provider.local.size()) + " local sets, partition has " +
              std::to_string(partition.count()) + " subsequences");

  std::vector<PosteriorMatrix> local;
  std::vector<int> local_counts;
  local.reserve(provider.local.size());
  for (Index l = 0; l < partition.count(); ++l) {
    const LocalAttractorSet& set = provider.local[static_cast<size_t>(l)];
    Require(set.subsequence_id == l, ErrorCode::kInvalidArgument,
            "local attractor sets must be ordered by subsequence");
    set.validate(embeddings.dim());
    local.push_back(ActivityPosteriors(
        embeddings.data().middleRows(partition.begin(l), partition.length(l)), set.attractors));
    local_counts.push_back(static_cast<int>(set.speakers()));
  }

  const ConvertedVectorPool pool =
      ConvertedVectorPool::FromLocalSets(provider.local, embeddings.dim());
  int k = 0;
  std::vector<int> labels;
  if (pool.size() == 1) {
    k = 1;
    labels = {0};
  } else if (pool.size() > 1) {
    const EigenSpectrum spectrum = EigvalsDesc(BuildModifiedAffinity(pool, cfg.margin));
    k = ApplyCountFloor(CountEigenratioFiltered(spectrum), local_counts);
    const ClusterAssignment assignment =
        ClcKmeans(pool.columns, k, CannotLinkSet::FromPool(pool),
                  KMeansOptions{cfg.seed, cfg.max_iter, cfg.tol});
    labels = assignment.labels;
  }
  return Stitch(local, labels, partition, k, cfg.activity_threshold, embeddings.frame_duration());
}

DiarizationResult InferSwitch(const FrameEmbeddingMatrix& embeddings,
                              const ProviderOutput& provider, const PipelineConfig& cfg) {
  cfg.validate();
  if (provider.global_count() < cfg.switch_threshold) {
    return InferGlobal(embeddings, provider, cfg);
  }
  return InferLocal(embeddings, provider, cfg);
}

DiarizationResult Infer(InferenceMode mode, const FrameEmbeddingMatrix& embeddings,
                        const ProviderOutput& provider, const PipelineConfig& cfg) {
  switch (mode) {
    case InferenceMode::kGlobal:
      return InferGlobal(embeddings, provider, cfg);
    case InferenceMode::kLocal:
      return InferLocal(embeddings, provider, cfg);
    case InferenceMode::kSwitch:
      return InferSwitch(embeddings, provider, cfg);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown inference mode");
}

}  // namespace ladiar

#include "ladiar/core.hpp"

#include <cmath>

namespace ladiar {

void Fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

const char* BranchName(Branch b) { return b == Branch::kGlobal ? "global" : "local"; }

FrameEmbeddingMatrix::FrameEmbeddingMatrix(Matrix data, double frame_duration)
    : data_(std::move(data)), frame_duration_(frame_duration) {
  Require(data_.rows() >= 1 && data_.cols() >= 1, ErrorCode::kInvalidArgument,
          "embedding matrix must have T >= 1 and D >= 1");
  Require(data_.allFinite(), ErrorCode::kInvalidArgument, "embedding matrix has non-finite entries");
  Require(frame_duration_ > 0.0 && std::isfinite(frame_duration_), ErrorCode::kInvalidArgument,
          "frame_duration must be positive");
}

SubsequencePartition::SubsequencePartition(std::vector<Index> boundaries)
    : boundaries_(std::move(boundaries)) {
  Require(boundaries_.size() >= 2, ErrorCode::kInvalidArgument,
          "partition needs at least one subsequence");
  Require(boundaries_.front() == 0, ErrorCode::kInvalidArgument, "partition must start at 0");
  for (size_t i = 1; i < boundaries_.size(); ++i) {
    Require(boundaries_[i] > boundaries_[i - 1], ErrorCode::kInvalidArgument,
            "partition boundaries must be strictly increasing");
  }
}

ActivityMatrix::ActivityMatrix(Index frames, Index speakers)
    : data_(Eigen::MatrixXi::Zero(frames, speakers)) {}

ActivityMatrix::ActivityMatrix(const Matrix& values) : data_(values.rows(), values.cols()) {
  for (Index t = 0; t < values.rows(); ++t) {
    for (Index s = 0; s < values.cols(); ++s) {
      const double v = values(t, s);
      Require(v == 0.0 || v == 1.0, ErrorCode::kInvalidArgument,
              "activity entries must be 0 or 1");
      data_(t, s) = v == 1.0 ? 1 : 0;
    }
  }
}

void LocalAttractorSet::validate(Index dim) const {
  const Index n = attractors.cols();
  Require(converted.cols() == n, ErrorCode::kDimensionMismatch,
          "attractor and converted column counts differ in subsequence " +
              std::to_string(subsequence_id));
  Require(static_cast<Index>(existence.size()) == n, ErrorCode::kDimensionMismatch,
          "existence probability count differs from attractor count in subsequence " +
              std::to_string(subsequence_id));
  if (n == 0) return;
  Require(attractors.rows() == dim && converted.rows() == dim, ErrorCode::kDimensionMismatch,
          "local attractor dimension does not match embeddings");
  for (double p : existence) {
    Require(p >= 0.5 && p < 1.0, ErrorCode::kInvalidArgument,
            "accepted existence probabilities must lie in [0.5, 1)");
  }
  for (Index j = 0; j < n; ++j) {
    Require(converted.col(j).norm() > 0.0, ErrorCode::kInvalidArgument,
            "converted vector with zero norm");
  }
}

ConvertedVectorPool ConvertedVectorPool::FromLocalSets(const std::vector<LocalAttractorSet>& sets,
                                                       Index dim) {
  Index total = 0;
  for (const auto& s : sets) total += s.converted.cols();
  ConvertedVectorPool pool;
  pool.columns.resize(dim, total);
  pool.origin.reserve(static_cast<size_t>(total));
  Index c = 0;
  for (const auto& s : sets) {
    for (Index j = 0; j < s.converted.cols(); ++j) {
      pool.columns.col(c++) = s.converted.col(j);
      pool.origin.push_back({s.subsequence_id, j});
    }
  }
  return pool;
}

SubsequencePartition PartitionFrames(Index frames, Index subseq_len) {
  Require(frames >= 1, ErrorCode::kInvalidArgument, "frame count must be >= 1");
  Require(subseq_len >= 1, ErrorCode::kInvalidArgument, "subsequence length must be >= 1");
  std::vector<Index> b;
  b.reserve(static_cast<size_t>(frames / subseq_len + 2));
  for (Index t = 0; t < frames; t += subseq_len) b.push_back(t);
  b.push_back(frames);
  return SubsequencePartition(std::move(b));
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

PosteriorMatrix ActivityPosteriors(const Matrix& embeddings, const Matrix& attractors) {
  if (attractors.cols() == 0) return {Matrix(embeddings.rows(), 0)};
  Require(embeddings.cols() == attractors.rows(), ErrorCode::kDimensionMismatch,
          "embedding dimension " + std::to_string(embeddings.cols()) +
              " does not match attractor dimension " + std::to_string(attractors.rows()));
  Matrix logits = embeddings * attractors;
  return {logits.unaryExpr([](double v) { return Sigmoid(v); })};
}

PosteriorMatrix ActivityPosteriors(const FrameEmbeddingMatrix& embeddings, const Matrix& attractors) {
  return ActivityPosteriors(embeddings.data(), attractors);
}

std::vector<Segment> Binarize(const PosteriorMatrix& posteriors, double threshold,
                              double frame_duration) {
  Require(threshold > 0.0 && threshold < 1.0, ErrorCode::kInvalidArgument,
          "activity threshold must lie in (0, 1)");
  Require(frame_duration > 0.0, ErrorCode::kInvalidArgument, "frame_duration must be positive");
  std::vector<Segment> out;
  const Matrix& p = posteriors.data;
  for (Index s = 0; s < p.cols(); ++s) {
    Index t = 0;
    while (t < p.rows()) {
      if (p(t, s) < threshold) {
        ++t;
        continue;
      }
      const Index start = t;
      while (t < p.rows() && p(t, s) >= threshold) ++t;
      out.push_back({static_cast<int>(s), static_cast<double>(start) * frame_duration,
                     static_cast<double>(t) * frame_duration});
    }
  }
  return out;
}

}  // namespace ladiar

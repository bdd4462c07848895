#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ladiar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Probability floor used wherever a value must stay inside the open unit
/// interval (BCE clamping, inactive stitched cells).
inline constexpr double kProbEpsilon = 1e-7;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kIo = 3,
  kParse = 4,
  kInfeasible = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& what);
inline void Require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) Fail(code, what);
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// T x D frame-wise embeddings (one row per frame).
class FrameEmbeddingMatrix {
 public:
  explicit FrameEmbeddingMatrix(Matrix data, double frame_duration = 0.1);

  const Matrix& data() const noexcept { return data_; }
  Index frames() const noexcept { return data_.rows(); }
  Index dim() const noexcept { return data_.cols(); }
  double frame_duration() const noexcept { return frame_duration_; }

 private:
  Matrix data_;
  double frame_duration_;
};

/// Boundaries 0 = t_0 < t_1 < ... < t_L = T.
class SubsequencePartition {
 public:
  explicit SubsequencePartition(std::vector<Index> boundaries);

  const std::vector<Index>& boundaries() const noexcept { return boundaries_; }
  Index count() const noexcept { return static_cast<Index>(boundaries_.size()) - 1; }
  Index begin(Index l) const { return boundaries_.at(static_cast<size_t>(l)); }
  Index end(Index l) const { return boundaries_.at(static_cast<size_t>(l) + 1); }
  Index length(Index l) const { return end(l) - begin(l); }
  Index frames() const noexcept { return boundaries_.back(); }

  friend bool operator==(const SubsequencePartition&, const SubsequencePartition&) = default;

 private:
  std::vector<Index> boundaries_;
};

/// T x S matrix of speech-activity posteriors.
struct PosteriorMatrix {
  Matrix data;

  Index frames() const noexcept { return data.rows(); }
  Index speakers() const noexcept { return data.cols(); }
};

/// T x S binary ground-truth activity.
class ActivityMatrix {
 public:
  ActivityMatrix() = default;
  ActivityMatrix(Index frames, Index speakers);
  /// Entries must be exactly 0 or 1.
  explicit ActivityMatrix(const Matrix& values);

  const Eigen::MatrixXi& data() const noexcept { return data_; }
  Index frames() const noexcept { return data_.rows(); }
  Index speakers() const noexcept { return data_.cols(); }
  bool active(Index t, Index s) const { return data_(t, s) != 0; }
  void set(Index t, Index s, bool on) { data_(t, s) = on ? 1 : 0; }
  Matrix as_real() const { return data_.cast<double>(); }

 private:
  Eigen::MatrixXi data_;
};

/// Local attractors for one subsequence. Columns are speakers.
struct LocalAttractorSet {
  Index subsequence_id = 0;
  Matrix attractors;               // D x S_l
  std::vector<double> existence;   // accepted existence probabilities (>= 0.5)
  Matrix converted;                // D x S_l

  Index speakers() const noexcept { return attractors.cols(); }
  void validate(Index dim) const;
};

struct PoolOrigin {
  Index subsequence = 0;
  Index local_index = 0;
  friend bool operator==(const PoolOrigin&, const PoolOrigin&) = default;
};

/// Converted vectors from all subsequences, B = [B_1 ... B_L].
struct ConvertedVectorPool {
  Matrix columns;                  // D x S*
  std::vector<PoolOrigin> origin;  // one per column

  Index size() const noexcept { return columns.cols(); }
  static ConvertedVectorPool FromLocalSets(const std::vector<LocalAttractorSet>& sets, Index dim);
};

struct Segment {
  int speaker = 0;
  double onset = 0.0;
  double offset = 0.0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

enum class Branch { kGlobal, kLocal };

struct DiarizationResult {
  PosteriorMatrix posteriors;
  int speaker_count = 0;
  std::vector<Segment> segments;
  Branch branch = Branch::kGlobal;
};

const char* BranchName(Branch b);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Splits [0, T) into consecutive blocks of subseq_len frames; the last block
/// holds the remainder.
SubsequencePartition PartitionFrames(Index frames, Index subseq_len);

double Sigmoid(double x);

/// y_{t,s} = sigmoid(e_t . a_s). `attractors` is D x S.
PosteriorMatrix ActivityPosteriors(const Matrix& embeddings, const Matrix& attractors);
PosteriorMatrix ActivityPosteriors(const FrameEmbeddingMatrix& embeddings, const Matrix& attractors);

/// Maximal runs of frames with posterior >= threshold, per speaker, ordered by
/// speaker then onset.
std::vector<Segment> Binarize(const PosteriorMatrix& posteriors, double threshold,
                              double frame_duration);

}  // namespace ladiar

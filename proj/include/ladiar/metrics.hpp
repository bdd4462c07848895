#pragma once

#include "ladiar/core.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ladiar {

struct LabeledSegment {
  std::string speaker;
  double onset = 0.0;
  double offset = 0.0;
  friend bool operator==(const LabeledSegment&, const LabeledSegment&) = default;
};

std::vector<LabeledSegment> LabelSegments(const std::vector<Segment>& segments,
                                          const std::string& prefix = "spk");

enum class MappingMode { kAssignment, kExhaustive };

struct DerOptions {
  double collar = 0.0;           // seconds, applied on both sides of a boundary
  bool exclude_overlap = false;  // drop regions with >= 2 reference speakers
  MappingMode mapping = MappingMode::kAssignment;
};

/// Times in seconds; rates in percent of scored reference speech.
struct ScoringReport {
  double miss_time = 0.0;
  double fa_time = 0.0;
  double confusion_time = 0.0;
  double ref_time = 0.0;  // scored reference speaker time
  double scored_time = 0.0;  // wall-clock duration of the scored region

  double der = 0.0;
  double miss = 0.0;
  double fa = 0.0;
  double confusion = 0.0;
  double jer = 0.0;
  /// False when there is no scored reference speech; the rates are NaN then.
  bool scorable = true;
  std::map<std::string, std::string> mapping;  // hypothesis -> reference

  void finalize();
};

/// Diarization error rate of one recording. The hypothesis-to-reference
/// speaker map maximises total overlap within the scored region. The no-score
/// region is +/- collar around every reference and hypothesis boundary.
ScoringReport Der(const std::vector<LabeledSegment>& ref, const std::vector<LabeledSegment>& hyp,
                  const DerOptions& options = {});

/// Jaccard error rate: mean over reference speakers of
/// 100 * (miss + fa) / |ref_r union hyp_map(r)|, using the collar-free
/// DER-optimal mapping. Unmapped reference speakers score 100. NaN when the
/// reference has no speech.
double Jer(const std::vector<LabeledSegment>& ref, const std::vector<LabeledSegment>& hyp);

/// Per-speaker JER terms, in reference speaker order (for pooling across
/// recordings).
std::vector<double> JerTerms(const std::vector<LabeledSegment>& ref,
                             const std::vector<LabeledSegment>& hyp);

using Recordings = std::map<std::string, std::vector<LabeledSegment>>;

/// Micro-averaged DER (times summed before dividing) and JER averaged over all
/// reference speakers of all recordings.
ScoringReport ScoreRecordings(const Recordings& ref, const Recordings& hyp,
                              const DerOptions& options = {});

/// Speaker-count confusion with rows = predicted, columns = reference; index 7
/// collects everything >= 7.
struct CountConfusion {
  static constexpr int kSize = 8;
  std::array<std::array<int, kSize>, kSize> matrix{};

  int total() const;
  /// Rows 1..6 and "7+" against reference columns 1..max_ref (row 0 only
  /// when used).
  std::string Render(int max_ref = 6) const;
};

CountConfusion CountConfusionOf(const std::vector<std::pair<int, int>>& predicted_reference);

}  // namespace ladiar

#pragma once

#include "ladiar/core.hpp"
#include "ladiar/losses.hpp"
#include "ladiar/metrics.hpp"
#include "ladiar/pipeline.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ladiar {

// ---------------------------------------------------------------------------
// RTTM
// ---------------------------------------------------------------------------

/// Parses SPEAKER records. Blank lines and '#' comments are ignored; other
/// record types are skipped and reported in `warnings` if given.
Recordings ParseRttm(std::istream& in, const std::string& source,
                     std::vector<std::string>* warnings = nullptr);
Recordings ReadRttm(const std::string& path, std::vector<std::string>* warnings = nullptr);

/// Writes SPEAKER records with times quantised to 1 ms, ordered by onset then
/// speaker. Segments shorter than 1 ms after quantisation are dropped.
void WriteRttm(std::ostream& out, const std::string& file_id,
               const std::vector<LabeledSegment>& segments);
void WriteRttm(const std::string& path, const Recordings& recordings);

// ---------------------------------------------------------------------------
// Matrix files
// ---------------------------------------------------------------------------

enum class MatrixFormat { kText, kBinary };

/// Text: "EMB v1 T D" header then T rows of D values (9 significant digits).
/// Binary: "EMB1", little-endian u32 T, u32 D, T*D little-endian f32, row-major.
void WriteMatrix(std::ostream& out, const Matrix& m, MatrixFormat format);
void WriteMatrix(const std::string& path, const Matrix& m, MatrixFormat format);
/// Detects the format from the first bytes.
Matrix ReadMatrix(std::istream& in, const std::string& source);
Matrix ReadMatrix(const std::string& path);

// ---------------------------------------------------------------------------
// Provider bundle
// ---------------------------------------------------------------------------

/// JSON manifest plus matrix files. Attractor and converted matrices are
/// stored one vector per row.
struct ProviderBundle {
  ProviderOutput output;
  SubsequencePartition partition{{0, 1}};
  double frame_duration = 0.1;
  Index dim = 0;
  /// Resolved path of the embedding matrix, when the manifest names one.
  std::optional<std::string> embeddings_path;
};

/// Writes `<dir>/provider.json` and its matrix files; returns the manifest
/// path. `embeddings_file` is stored relative to `dir` when given.
std::string WriteProviderBundle(const std::string& dir, const ProviderBundle& bundle,
                                MatrixFormat format,
                                const std::optional<std::string>& embeddings_file = std::nullopt);
ProviderBundle ReadProviderBundle(const std::string& manifest_path);

// ---------------------------------------------------------------------------
// JSON views
// ---------------------------------------------------------------------------

nlohmann::ordered_json ToJson(const LossBreakdown& b);
nlohmann::ordered_json ToJson(const ScoringReport& r);
nlohmann::ordered_json ToJson(const CountConfusion& c);

}  // namespace ladiar

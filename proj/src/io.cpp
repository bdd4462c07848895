#include "ladiar/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace ladiar {

namespace {

std::ifstream OpenIn(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  Require(in.good(), ErrorCode::kIo, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream OpenOut(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot open '" + path + "' for writing");
  return out;
}

[[noreturn]] void ParseFail(const std::string& source, size_t line, const std::string& what) {
  Fail(ErrorCode::kParse, source + ":" + std::to_string(line) + ": " + what);
}

double ParseDouble(const std::string& tok, const std::string& source, size_t line) {
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    ParseFail(source, line, "invalid number '" + tok + "'");
  }
}

std::string FormatFixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// RTTM
// ---------------------------------------------------------------------------

Recordings ParseRttm(std::istream& in, const std::string& source,
                     std::vector<std::string>* warnings) {
  Recordings out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    if (f.empty() || f[0].front() == '#') continue;
    if (f[0] != "SPEAKER") {
      if (warnings) {
        warnings->push_back(source + ":" + std::to_string(lineno) + ": skipping record type '" +
                            f[0] + "'");
      }
      continue;
    }
    if (f.size() < 8) ParseFail(source, lineno, "SPEAKER record needs at least 8 fields");
    const double onset = ParseDouble(f[3], source, lineno);
    const double duration = ParseDouble(f[4], source, lineno);
    if (onset < 0.0) ParseFail(source, lineno, "negative onset");
    if (duration <= 0.0) ParseFail(source, lineno, "non-positive duration " + f[4]);
    out[f[1]].push_back({f[7], onset, onset + duration});
  }
  return out;
}

Recordings ReadRttm(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in = OpenIn(path);
  return ParseRttm(in, path, warnings);
}

void WriteRttm(std::ostream& out, const std::string& file_id,
               const std::vector<LabeledSegment>& segments) {
  struct Row {
    std::int64_t on_ms;
    std::int64_t dur_ms;
    std::string speaker;
  };
  std::vector<Row> rows;
  for (const auto& s : segments) {
    const std::int64_t on = std::llround(s.onset * 1000.0);
    const std::int64_t off = std::llround(s.offset * 1000.0);
    if (off > on) rows.push_back({on, off - on, s.speaker});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.on_ms != b.on_ms ? a.on_ms < b.on_ms : a.speaker < b.speaker;
  });
  for (const Row& r : rows) {
    out << "SPEAKER " << file_id << " 1 " << FormatFixed3(static_cast<double>(r.on_ms) / 1000.0)
        << ' ' << FormatFixed3(static_cast<double>(r.dur_ms) / 1000.0) << " <NA> <NA> "
        << r.speaker << " <NA> <NA>\n";
  }
}

void WriteRttm(const std::string& path, const Recordings& recordings) {
  std::ofstream out = OpenOut(path);
  for (const auto& [id, segs] : recordings) WriteRttm(out, id, segs);
  Require(out.good(), ErrorCode::kIo, "failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Matrix files
// ---------------------------------------------------------------------------

namespace {

constexpr char kBinaryMagic[4] = {'E', 'M', 'B', '1'};

void PutU32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t GetU32(std::istream& in, const std::string& source) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  Require(in.gcount() == 4, ErrorCode::kParse, source + ": truncated binary header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void WriteMatrix(std::ostream& out, const Matrix& m, MatrixFormat format) {
  Require(m.rows() <= UINT32_MAX && m.cols() <= UINT32_MAX, ErrorCode::kInvalidArgument,
          "matrix too large for the EMB format");
  if (format == MatrixFormat::kBinary) {
    out.write(kBinaryMagic, 4);
    PutU32(out, static_cast<std::uint32_t>(m.rows()));
    PutU32(out, static_cast<std::uint32_t>(m.cols()));
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) {
        PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))));
      }
    }
    return;
  }
  out << "EMB v1 " << m.rows() << ' ' << m.cols() << '\n';
  char buf[32];
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", m(r, c));
      if (c) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

void WriteMatrix(const std::string& path, const Matrix& m, MatrixFormat format) {
  std::ofstream out = OpenOut(path, format == MatrixFormat::kBinary);
  WriteMatrix(out, m, format);
  Require(out.good(), ErrorCode::kIo, "failed writing '" + path + "'");
}

Matrix ReadMatrix(std::istream& in, const std::string& source) {
  char magic[4] = {};
  in.read(magic, 4);
  Require(in.gcount() == 4, ErrorCode::kParse, source + ": file too short for a matrix header");

  if (std::memcmp(magic, kBinaryMagic, 4) == 0) {
    const std::uint32_t rows = GetU32(in, source);
    const std::uint32_t cols = GetU32(in, source);
    Matrix m(rows, cols);
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        Require(in.gcount() == 4, ErrorCode::kParse,
                source + ": binary payload shorter than declared " + std::to_string(rows) + "x" +
                    std::to_string(cols));
        const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                   (static_cast<std::uint32_t>(b[1]) << 8) |
                                   (static_cast<std::uint32_t>(b[2]) << 16) |
                                   (static_cast<std::uint32_t>(b[3]) << 24);
        m(r, c) = static_cast<double>(std::bit_cast<float>(bits));
      }
    }
    in.peek();
    Require(in.eof(), ErrorCode::kParse, source + ": trailing bytes after binary payload");
    return m;
  }

  Require(std::memcmp(magic, "EMB ", 4) == 0, ErrorCode::kParse,
          source + ": unrecognised matrix header");
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string version;
  long long rows = -1, cols = -1;
  hs >> version >> rows >> cols;
  Require(version == "v1" && rows >= 0 && cols >= 0 && !hs.fail(), ErrorCode::kParse,
          source + ":1: expected header 'EMB v1 T D'");
  Matrix m(rows, cols);
  std::string line;
  size_t lineno = 1;
  Index r = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string tok; ls >> tok;) toks.push_back(tok);
    if (toks.empty()) continue;
    if (r >= rows) ParseFail(source, lineno, "more rows than the declared " + std::to_string(rows));
    if (static_cast<long long>(toks.size()) != cols) {
      ParseFail(source, lineno,
                "expected " + std::to_string(cols) + " values, found " + std::to_string(toks.size()));
    }
    for (Index c = 0; c < cols; ++c) m(r, c) = ParseDouble(toks[static_cast<size_t>(c)], source, lineno);
    ++r;
  }
  Require(r == rows, ErrorCode::kParse,
          source + ": header declares " + std::to_string(rows) + " rows but " +
              std::to_string(r) + " are present");
  return m;
}

Matrix ReadMatrix(const std::string& path) {
  std::ifstream in = OpenIn(path, true);
  return ReadMatrix(in, path);
}

// ---------------------------------------------------------------------------
// Provider bundle
// ---------------------------------------------------------------------------

namespace {

std::string MatrixExt(MatrixFormat f) { return f == MatrixFormat::kBinary ? ".bin" : ".emb"; }

std::vector<double> ProbList(const ordered_json& j, const std::string& what) {
  Require(j.is_array(), ErrorCode::kParse, "manifest field '" + what + "' must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    Require(v.is_number(), ErrorCode::kParse, "manifest field '" + what + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

const ordered_json& Field(const ordered_json& j, const char* key) {
  Require(j.is_object() && j.contains(key), ErrorCode::kParse,
          std::string("manifest is missing field '") + key + "'");
  return j.at(key);
}

// Reads a matrix stored one vector per row and returns it as D x n.
Matrix ReadColumns(const fs::path& base, const ordered_json& rel, Index dim, const std::string& what) {
  Require(rel.is_string(), ErrorCode::kParse, "manifest field '" + what + "' must be a path");
  const Matrix rows = ReadMatrix((base / rel.get<std::string>()).string());
  Require(rows.cols() == dim || rows.rows() == 0, ErrorCode::kDimensionMismatch,
          what + " has dimension " + std::to_string(rows.cols()) + ", manifest says " +
              std::to_string(dim));
  Matrix cols = rows.transpose();
  if (rows.rows() == 0) cols.resize(dim, 0);
  return cols;
}

}  // namespace

std::string WriteProviderBundle(const std::string& dir, const ProviderBundle& bundle,
                                MatrixFormat format,
                                const std::optional<std::string>& embeddings_file) {
  const fs::path base(dir);
  std::error_code ec;
  fs::create_directories(base, ec);
  Require(!ec, ErrorCode::kIo, "cannot create directory '" + dir + "'");
  const ProviderOutput& out = bundle.output;
  Require(static_cast<Index>(out.local.size()) == bundle.partition.count(),
          ErrorCode::kDimensionMismatch, "one local set per subsequence is required");
  const std::string ext = MatrixExt(format);

  ordered_json j;
  j["format"] = "ladiar-provider";
  j["version"] = "v1";
  j["frame_duration"] = bundle.frame_duration;
  j["dim"] = bundle.dim;
  if (embeddings_file) j["embeddings"] = *embeddings_file;
  j["partition"] = bundle.partition.boundaries();

  const std::string global_file = "global_attractors" + ext;
  WriteMatrix((base / global_file).string(), Matrix(out.global_attractors.transpose()), format);
  j["global"] = {{"attractors", global_file}, {"existence", out.global_existence}};

  ordered_json subs = ordered_json::array();
  for (const LocalAttractorSet& set : out.local) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "sub%04lld", static_cast<long long>(set.subsequence_id));
    const std::string attr = std::string(stem) + "_attractors" + ext;
    const std::string conv = std::string(stem) + "_converted" + ext;
    WriteMatrix((base / attr).string(), Matrix(set.attractors.transpose()), format);
    WriteMatrix((base / conv).string(), Matrix(set.converted.transpose()), format);
    subs.push_back({{"attractors", attr}, {"converted", conv}, {"existence", set.existence}});
  }
  j["subsequences"] = std::move(subs);

  const fs::path manifest = base / "provider.json";
  std::ofstream os = OpenOut(manifest.string());
  os << j.dump(2) << '\n';
  Require(os.good(), ErrorCode::kIo, "failed writing '" + manifest.string() + "'");
  return manifest.string();
}

ProviderBundle ReadProviderBundle(const std::string& manifest_path) {
  std::ifstream in = OpenIn(manifest_path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, manifest_path + ": " + e.what());
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  Require(Field(j, "version") == "v1", ErrorCode::kParse, manifest_path + ": unsupported version");

  ProviderBundle b;
  try {
    b.frame_duration = Field(j, "frame_duration").get<double>();
    b.dim = Field(j, "dim").get<Index>();
    b.partition = SubsequencePartition(Field(j, "partition").get<std::vector<Index>>());
    if (j.contains("embeddings")) {
      b.embeddings_path = (base / j.at("embeddings").get<std::string>()).string();
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, manifest_path + ": " + e.what());
  }
  Require(b.frame_duration > 0.0 && b.dim >= 1, ErrorCode::kParse,
          manifest_path + ": frame_duration and dim must be positive");

  const ordered_json& g = Field(j, "global");
  b.output.global_attractors = ReadColumns(base, Field(g, "attractors"), b.dim, "global attractors");
  b.output.global_existence = ProbList(Field(g, "existence"), "global.existence");

  const ordered_json& subs = Field(j, "subsequences");
  Require(subs.is_array() && static_cast<Index>(subs.size()) == b.partition.count(),
          ErrorCode::kDimensionMismatch,
          manifest_path + ": subsequence entries do not match the partition");
  for (size_t l = 0; l < subs.size(); ++l) {
    LocalAttractorSet set;
    set.subsequence_id = static_cast<Index>(l);
    const std::string tag = "subsequence " + std::to_string(l);
    set.attractors = ReadColumns(base, Field(subs[l], "attractors"), b.dim, tag + " attractors");
    set.converted = ReadColumns(base, Field(subs[l], "converted"), b.dim, tag + " converted");
    set.existence = ProbList(Field(subs[l], "existence"), tag + " existence");
    b.output.local.push_back(std::move(set));
  }
  b.output.validate(b.dim);
  return b;
}

// ---------------------------------------------------------------------------
// JSON views
// ---------------------------------------------------------------------------

namespace {

ordered_json Num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

}  // namespace

ordered_json ToJson(const LossBreakdown& b) {
  return {{"diar", b.diar},
          {"exist", b.exist},
          {"pair", b.pair},
          {"global", b.global_total},
          {"local", b.local_total},
          {"both", b.both_total},
          {"alpha", b.alpha},
          {"gamma", b.gamma}};
}

ordered_json ToJson(const ScoringReport& r) {
  ordered_json j;
  j["der"] = Num(r.der);
  j["miss"] = Num(r.miss);
  j["fa"] = Num(r.fa);
  j["confusion"] = Num(r.confusion);
  j["jer"] = Num(r.jer);
  j["scorable"] = r.scorable;
  j["ref_time"] = r.ref_time;
  j["scored_time"] = r.scored_time;
  j["miss_time"] = r.miss_time;
  j["fa_time"] = r.fa_time;
  j["confusion_time"] = r.confusion_time;
  j["mapping"] = r.mapping;
  return j;
}

ordered_json ToJson(const CountConfusion& c) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : c.matrix) rows.push_back(row);
  return {{"rows", "predicted 0..6, 7+"}, {"columns", "reference 0..6, 7+"}, {"matrix", rows}};
}

}  // namespace ladiar

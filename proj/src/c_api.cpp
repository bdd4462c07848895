#include "ladiar/ladiar.h"

#include "ladiar/core.hpp"
#include "ladiar/counting.hpp"
#include "ladiar/io.hpp"
#include "ladiar/losses.hpp"
#include "ladiar/metrics.hpp"
#include "ladiar/pipeline.hpp"
#include "ladiar/simulator.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <new>
#include <set>
#include <string>

using nlohmann::ordered_json;

struct ladiar_matrix {
  ladiar::Matrix m;
};

struct ladiar_provider {
  ladiar::ProviderBundle bundle;
};

struct ladiar_result {
  ladiar::DiarizationResult r;
};

namespace {

thread_local std::string g_last_error;

ladiar_status ToStatus(ladiar::ErrorCode code) {
  switch (code) {
    case ladiar::ErrorCode::kInvalidArgument:
      return LADIAR_ERR_INVALID_ARGUMENT;
    case ladiar::ErrorCode::kDimensionMismatch:
      return LADIAR_ERR_DIMENSION;
    case ladiar::ErrorCode::kIo:
      return LADIAR_ERR_IO;
    case ladiar::ErrorCode::kParse:
      return LADIAR_ERR_PARSE;
    case ladiar::ErrorCode::kInfeasible:
      return LADIAR_ERR_INFEASIBLE;
  }
  return LADIAR_ERR_INTERNAL;
}

template <typename F>
ladiar_status Guard(F&& f) {
  try {
    f();
    return LADIAR_OK;
  } catch (const ladiar::Error& e) {
    g_last_error = e.what();
    return ToStatus(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LADIAR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LADIAR_ERR_INTERNAL;
  }
}

void NotNull(const void* p, const char* what) {
  ladiar::Require(p != nullptr, ladiar::ErrorCode::kInvalidArgument,
                  std::string(what) + " must not be NULL");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ladiar::Index FramesFor(double seconds, double frame_duration) {
  return static_cast<ladiar::Index>(std::llround(seconds / frame_duration));
}

}  // namespace

extern "C" {

const char* ladiar_version(void) { return "1.0.0"; }

const char* ladiar_last_error(void) { return g_last_error.c_str(); }

const char* ladiar_status_name(ladiar_status status) {
  switch (status) {
    case LADIAR_OK:
      return "ok";
    case LADIAR_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case LADIAR_ERR_DIMENSION:
      return "dimension mismatch";
    case LADIAR_ERR_IO:
      return "i/o error";
    case LADIAR_ERR_PARSE:
      return "parse error";
    case LADIAR_ERR_INFEASIBLE:
      return "infeasible";
    case LADIAR_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown";
}

void ladiar_string_free(char* s) { std::free(s); }

// ---- matrices -------------------------------------------------------------

ladiar_status ladiar_matrix_create(size_t rows, size_t cols, const double* data,
                                   ladiar_matrix** out) {
  return Guard([&] {
    NotNull(out, "out");
    auto h = std::make_unique<ladiar_matrix>();
    h->m = ladiar::Matrix::Zero(static_cast<ladiar::Index>(rows), static_cast<ladiar::Index>(cols));
    if (data) {
      for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) h->m(r, c) = data[r * cols + c];
      }
    }
    *out = h.release();
  });
}

ladiar_status ladiar_matrix_read(const char* path, ladiar_matrix** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    auto h = std::make_unique<ladiar_matrix>();
    h->m = ladiar::ReadMatrix(std::string(path));
    *out = h.release();
  });
}

ladiar_status ladiar_matrix_write(const ladiar_matrix* m, const char* path, int binary) {
  return Guard([&] {
    NotNull(m, "matrix");
    NotNull(path, "path");
    ladiar::WriteMatrix(std::string(path), m->m,
                        binary ? ladiar::MatrixFormat::kBinary : ladiar::MatrixFormat::kText);
  });
}

size_t ladiar_matrix_rows(const ladiar_matrix* m) { return m ? static_cast<size_t>(m->m.rows()) : 0; }
size_t ladiar_matrix_cols(const ladiar_matrix* m) { return m ? static_cast<size_t>(m->m.cols()) : 0; }

double ladiar_matrix_get(const ladiar_matrix* m, size_t row, size_t col) {
  if (!m || row >= static_cast<size_t>(m->m.rows()) || col >= static_cast<size_t>(m->m.cols())) {
    return std::nan("");
  }
  return m->m(static_cast<ladiar::Index>(row), static_cast<ladiar::Index>(col));
}

void ladiar_matrix_destroy(ladiar_matrix* m) { delete m; }

// ---- provider -------------------------------------------------------------

ladiar_status ladiar_provider_load(const char* manifest_path, ladiar_provider** out) {
  return Guard([&] {
    NotNull(manifest_path, "manifest_path");
    NotNull(out, "out");
    auto h = std::make_unique<ladiar_provider>();
    h->bundle = ladiar::ReadProviderBundle(manifest_path);
    *out = h.release();
  });
}

double ladiar_provider_frame_duration(const ladiar_provider* p) {
  return p ? p->bundle.frame_duration : 0.0;
}

size_t ladiar_provider_subsequence_frames(const ladiar_provider* p) {
  return p ? static_cast<size_t>(p->bundle.partition.length(0)) : 0;
}

const char* ladiar_provider_embeddings_path(const ladiar_provider* p) {
  if (!p || !p->bundle.embeddings_path) return nullptr;
  return p->bundle.embeddings_path->c_str();
}

size_t ladiar_provider_global_count(const ladiar_provider* p) {
  return p ? static_cast<size_t>(p->bundle.output.global_count()) : 0;
}

void ladiar_provider_destroy(ladiar_provider* p) { delete p; }

// ---- inference ------------------------------------------------------------

void ladiar_pipeline_options_default(ladiar_pipeline_options* opts) {
  if (!opts) return;
  opts->mode = LADIAR_MODE_SWITCH;
  opts->subseq_sec = 0.0;
  opts->margin = 0.5;
  opts->switch_threshold = 4;
  opts->activity_threshold = 0.5;
  opts->seed = 0;
}

ladiar_status ladiar_diarize(const ladiar_matrix* embeddings, double frame_duration,
                             const ladiar_provider* provider, const ladiar_pipeline_options* opts,
                             ladiar_result** out) {
  return Guard([&] {
    NotNull(embeddings, "embeddings");
    NotNull(provider, "provider");
    NotNull(out, "out");
    ladiar_pipeline_options o;
    ladiar_pipeline_options_default(&o);
    if (opts) o = *opts;

    const ladiar::ProviderBundle& b = provider->bundle;
    const double fd = frame_duration > 0.0 ? frame_duration : b.frame_duration;
    ladiar::FrameEmbeddingMatrix emb(embeddings->m, fd);
    ladiar::Require(emb.frames() == b.partition.frames(), ladiar::ErrorCode::kDimensionMismatch,
                    "embeddings have " + std::to_string(emb.frames()) +
                        " frames but the provider partition covers " +
                        std::to_string(b.partition.frames()));
    b.output.validate(emb.dim());

    ladiar::PipelineConfig cfg;
    cfg.subseq_len = b.partition.length(0);
    if (o.subseq_sec > 0.0) {
      cfg.subseq_len = FramesFor(o.subseq_sec, fd);
      ladiar::Require(ladiar::PartitionFrames(emb.frames(), cfg.subseq_len) == b.partition,
                      ladiar::ErrorCode::kInvalidArgument,
                      "subsequence length does not match the provider's partition");
    }
    cfg.margin = o.margin;
    cfg.switch_threshold = o.switch_threshold;
    cfg.activity_threshold = o.activity_threshold;
    cfg.seed = o.seed;

    ladiar::InferenceMode mode;
    switch (o.mode) {
      case LADIAR_MODE_GLOBAL:
        mode = ladiar::InferenceMode::kGlobal;
        break;
      case LADIAR_MODE_LOCAL:
        mode = ladiar::InferenceMode::kLocal;
        break;
      case LADIAR_MODE_SWITCH:
        mode = ladiar::InferenceMode::kSwitch;
        break;
      default:
        ladiar::Fail(ladiar::ErrorCode::kInvalidArgument, "unknown inference mode");
    }
    if (mode != ladiar::InferenceMode::kGlobal) {
      ladiar::Require(ladiar::PartitionFrames(emb.frames(), cfg.subseq_len) == b.partition,
                      ladiar::ErrorCode::kInvalidArgument,
                      "provider partition is not a uniform split of the recording");
    }
    auto h = std::make_unique<ladiar_result>();
    h->r = ladiar::Infer(mode, emb, b.output, cfg);
    *out = h.release();
  });
}

int ladiar_result_speaker_count(const ladiar_result* r) { return r ? r->r.speaker_count : 0; }

ladiar_branch ladiar_result_branch(const ladiar_result* r) {
  return r && r->r.branch == ladiar::Branch::kLocal ? LADIAR_BRANCH_LOCAL : LADIAR_BRANCH_GLOBAL;
}

size_t ladiar_result_segment_count(const ladiar_result* r) { return r ? r->r.segments.size() : 0; }

ladiar_status ladiar_result_segment(const ladiar_result* r, size_t index, int* speaker,
                                    double* onset, double* offset) {
  return Guard([&] {
    NotNull(r, "result");
    ladiar::Require(index < r->r.segments.size(), ladiar::ErrorCode::kInvalidArgument,
                    "segment index out of range");
    const ladiar::Segment& s = r->r.segments[index];
    if (speaker) *speaker = s.speaker;
    if (onset) *onset = s.onset;
    if (offset) *offset = s.offset;
  });
}

ladiar_status ladiar_result_posteriors(const ladiar_result* r, ladiar_matrix** out) {
  return Guard([&] {
    NotNull(r, "result");
    NotNull(out, "out");
    auto h = std::make_unique<ladiar_matrix>();
    h->m = r->r.posteriors.data;
    *out = h.release();
  });
}

ladiar_status ladiar_result_write_rttm(const ladiar_result* r, const char* file_id,
                                       const char* path) {
  return Guard([&] {
    NotNull(r, "result");
    NotNull(file_id, "file_id");
    NotNull(path, "path");
    ladiar::WriteRttm(std::string(path), {{file_id, ladiar::LabelSegments(r->r.segments)}});
  });
}

void ladiar_result_destroy(ladiar_result* r) { delete r; }

// ---- simulation -----------------------------------------------------------

void ladiar_simulation_options_default(ladiar_simulation_options* opts) {
  if (!opts) return;
  opts->speakers = 2;
  opts->duration_sec = 300.0;
  opts->frame_duration = 0.1;
  opts->beta = 0.0;
  opts->utt_min = 1.0;
  opts->utt_max = 4.0;
  opts->sigma = 0.05;
  opts->sigma_attr = 0.05;
  opts->dim = 16;
  opts->kappa = 8.0;
  opts->seed = 0;
  opts->cap = 0;
  opts->subseq_sec = 5.0;
  opts->binary = 1;
  opts->file_id = "rec";
}

ladiar_status ladiar_simulate(const ladiar_simulation_options* opts, const char* out_dir,
                              char** summary_json) {
  return Guard([&] {
    NotNull(out_dir, "out_dir");
    ladiar_simulation_options o;
    ladiar_simulation_options_default(&o);
    if (opts) o = *opts;
    ladiar::Require(o.frame_duration > 0.0 && o.duration_sec > 0.0 && o.subseq_sec > 0.0,
                    ladiar::ErrorCode::kInvalidArgument,
                    "durations must be positive");

    ladiar::SimulationConfig cfg;
    cfg.speakers = o.speakers;
    cfg.frames = FramesFor(o.duration_sec, o.frame_duration);
    cfg.frame_duration = o.frame_duration;
    cfg.beta = o.beta > 0.0 ? o.beta : ladiar::SilenceMeanForSpeakers(o.speakers);
    cfg.utt_min = o.utt_min;
    cfg.utt_max = o.utt_max;
    cfg.sigma = o.sigma;
    cfg.dim = static_cast<ladiar::Index>(o.dim);
    cfg.kappa = o.kappa;
    cfg.seed = o.seed;
    const ladiar::GroundTruth gt = ladiar::Simulate(cfg);

    const ladiar::Index subseq = FramesFor(o.subseq_sec, o.frame_duration);
    ladiar::Require(subseq >= 1, ladiar::ErrorCode::kInvalidArgument,
                    "subsequence shorter than one frame");
    const ladiar::SubsequencePartition partition = ladiar::PartitionFrames(cfg.frames, subseq);
    ladiar::OracleOptions oracle;
    if (o.cap > 0) oracle.cap = o.cap;
    oracle.sigma_attr = o.sigma_attr;
    oracle.seed = o.seed ^ 0x0a77AC7012ULL;
    const ladiar::OracleOutput provided = ladiar::OracleProvide(gt, partition, oracle);

    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    ladiar::Require(!ec, ladiar::ErrorCode::kIo, std::string("cannot create '") + out_dir + "'");
    const std::string file_id = o.file_id ? o.file_id : "rec";
    const auto format = o.binary ? ladiar::MatrixFormat::kBinary : ladiar::MatrixFormat::kText;
    const std::string emb_name = o.binary ? "embeddings.bin" : "embeddings.emb";

    ladiar::WriteRttm((dir / "ref.rttm").string(),
                      {{file_id, ladiar::LabelSegments(ladiar::ActivitySegments(
                                     gt.activity, cfg.frame_duration))}});
    ladiar::WriteMatrix((dir / emb_name).string(), gt.embeddings.data(), format);

    ladiar::ProviderBundle bundle;
    bundle.output = provided.provider;
    bundle.partition = partition;
    bundle.frame_duration = cfg.frame_duration;
    bundle.dim = cfg.dim;
    const std::string manifest = ladiar::WriteProviderBundle(dir.string(), bundle, format, emb_name);

    if (summary_json) {
      const auto per_sub = ladiar::ActiveSpeakersPerSubsequence(gt.activity, partition);
      int max_active = 0;
      for (int n : per_sub) max_active = std::max(max_active, n);
      ordered_json j;
      j["file_id"] = file_id;
      j["speakers"] = cfg.speakers;
      j["active_speakers"] = ladiar::ActiveSpeakerCount(gt.activity);
      j["frames"] = cfg.frames;
      j["beta"] = cfg.beta;
      j["overlap_ratio"] = ladiar::OverlapRatio(gt.activity);
      j["subsequences"] = partition.count();
      j["max_active_per_subsequence"] = max_active;
      j["global_attractors"] = provided.provider.global_count();
      j["reference"] = "ref.rttm";
      j["embeddings"] = emb_name;
      j["provider"] = std::filesystem::path(manifest).filename().string();
      *summary_json = Dup(j.dump(2));
    }
  });
}

// ---- verification and scoring --------------------------------------------

namespace {

std::string CountJson(const ladiar::ConvertedVectorPool& p, double margin) {
  ladiar::Require(p.size() >= 1, ladiar::ErrorCode::kInvalidArgument, "pool is empty");
  const auto raw = ladiar::EigvalsDesc(ladiar::BuildRawAffinity(p));
  const auto mod = ladiar::EigvalsDesc(ladiar::BuildModifiedAffinity(p, margin));
  std::map<ladiar::Index, int> per_group;
  for (const ladiar::PoolOrigin& o : p.origin) ++per_group[o.subsequence];
  std::vector<int> counts;
  for (const auto& [g, c] : per_group) counts.push_back(c);
  const int filtered = ladiar::CountEigenratioFiltered(mod);

  // The raw affinity is PSD in theory; clamp rounding noise before counting.
  ladiar::EigenSpectrum raw_clamped = raw;
  for (double& v : raw_clamped.values) v = std::max(v, 0.0);

  ordered_json j;
  j["pool_size"] = p.size();
  j["margin"] = margin;
  j["raw_spectrum"] = raw.values;
  j["modified_spectrum"] = mod.values;
  j["count_raw"] = ladiar::CountEigenratio(raw_clamped);
  j["count_modified"] = filtered;
  j["local_counts"] = counts;
  j["count"] = ladiar::ApplyCountFloor(filtered, counts);
  return j.dump(2);
}

}  // namespace

ladiar_status ladiar_count_json(const ladiar_matrix* pool, const int* groups, size_t n_groups,
                                double margin, char** json) {
  return Guard([&] {
    NotNull(pool, "pool");
    NotNull(json, "json");
    const ladiar::Index n = pool->m.rows();
    ladiar::Require(!groups || n_groups == static_cast<size_t>(n),
                    ladiar::ErrorCode::kDimensionMismatch,
                    "one group id per pool row is required");
    ladiar::ConvertedVectorPool p;
    p.columns = pool->m.transpose();
    std::map<ladiar::Index, ladiar::Index> next;
    for (ladiar::Index i = 0; i < n; ++i) {
      const ladiar::Index g = groups ? groups[i] : i;
      p.origin.push_back({g, next[g]++});
    }
    *json = Dup(CountJson(p, margin));
  });
}

ladiar_status ladiar_provider_count_json(const ladiar_provider* provider, double margin,
                                         char** json) {
  return Guard([&] {
    NotNull(provider, "provider");
    NotNull(json, "json");
    const ladiar::ProviderBundle& b = provider->bundle;
    *json = Dup(CountJson(ladiar::ConvertedVectorPool::FromLocalSets(b.output.local, b.dim), margin));
  });
}

void ladiar_loss_inputs_default(ladiar_loss_inputs* in) {
  if (!in) return;
  std::memset(in, 0, sizeof *in);
  in->margin = 0.5;
  in->alpha = 1.0;
  in->gamma = 1.0;
}

ladiar_status ladiar_losses_json(const ladiar_loss_inputs* in, char** json) {
  return Guard([&] {
    NotNull(in, "inputs");
    NotNull(in->posteriors, "posteriors");
    NotNull(in->labels, "labels");
    NotNull(json, "json");
    const ladiar::PosteriorMatrix p{in->posteriors->m};
    const ladiar::ActivityMatrix y(in->labels->m);
    const auto mode = in->exhaustive ? ladiar::DiarLossMode::kExhaustive
                                     : ladiar::DiarLossMode::kAssignment;
    const ladiar::DiarLossResult diar = ladiar::DiarizationLoss(p, y, mode);

    double exist = 0.0;
    if (in->existence) {
      exist = ladiar::ExistenceLoss(std::span<const double>(in->existence, in->n_existence),
                                    static_cast<int>(y.speakers()));
    }
    double pair = 0.0;
    if (in->pool) {
      NotNull(in->pool_labels, "pool_labels");
      ladiar::Require(in->n_pool_labels == static_cast<size_t>(in->pool->m.rows()),
                      ladiar::ErrorCode::kDimensionMismatch,
                      "one speaker label per pool row is required");
      ladiar::SpeakerCorrespondence corr;
      corr.labels.assign(in->pool_labels, in->pool_labels + in->n_pool_labels);
      pair = ladiar::PairwiseLoss(in->pool->m.transpose(), corr, 0, in->margin);
    }

    // Per-subsequence terms: each block is scored against the reference
    // speakers active in it, with posterior columns matched by the global
    // permutation. Existence terms are not available per block.
    std::vector<double> local_diar, local_exist;
    if (in->subseq_frames > 0) {
      const auto part = ladiar::PartitionFrames(p.frames(), static_cast<ladiar::Index>(in->subseq_frames));
      for (ladiar::Index l = 0; l < part.count(); ++l) {
        std::vector<ladiar::Index> cols;  // posterior columns whose reference is active
        for (ladiar::Index s = 0; s < p.speakers(); ++s) {
          const int r = diar.permutation[static_cast<size_t>(s)];
          if (y.data().col(r).segment(part.begin(l), part.length(l)).any()) cols.push_back(s);
        }
        ladiar::Matrix pl(part.length(l), static_cast<ladiar::Index>(cols.size()));
        ladiar::Matrix yl(part.length(l), static_cast<ladiar::Index>(cols.size()));
        for (size_t c = 0; c < cols.size(); ++c) {
          pl.col(c) = p.data.col(cols[c]).segment(part.begin(l), part.length(l));
          yl.col(c) = y.as_real().col(diar.permutation[static_cast<size_t>(cols[c])])
                          .segment(part.begin(l), part.length(l));
        }
        local_diar.push_back(
            ladiar::DiarizationLoss({pl}, ladiar::ActivityMatrix(yl), mode).loss);
        local_exist.push_back(0.0);
      }
    } else {
      local_diar.push_back(diar.loss);
      local_exist.push_back(exist);
    }
    const ladiar::LossBreakdown b =
        ladiar::CombineLosses(diar.loss, exist, pair, in->alpha, in->gamma, local_diar, local_exist);
    ordered_json j = ladiar::ToJson(b);
    j["permutation"] = diar.permutation;
    j["subsequences"] = local_diar.size();
    *json = Dup(j.dump(2));
  });
}

ladiar_status ladiar_score_json(const char* ref_rttm, const char* hyp_rttm, double collar,
                                int exclude_overlap, char** json) {
  return Guard([&] {
    NotNull(ref_rttm, "ref_rttm");
    NotNull(hyp_rttm, "hyp_rttm");
    NotNull(json, "json");
    std::vector<std::string> warnings;
    const auto ref = ladiar::ReadRttm(ref_rttm, &warnings);
    const auto hyp = ladiar::ReadRttm(hyp_rttm, &warnings);
    ladiar::DerOptions opt;
    opt.collar = collar;
    opt.exclude_overlap = exclude_overlap != 0;
    const ladiar::ScoringReport rep = ladiar::ScoreRecordings(ref, hyp, opt);
    ordered_json j = ladiar::ToJson(rep);
    j["collar"] = collar;
    j["exclude_overlap"] = opt.exclude_overlap;
    j["files"] = [&] {
      std::set<std::string> ids;
      for (const auto& [id, s] : ref) ids.insert(id);
      for (const auto& [id, s] : hyp) ids.insert(id);
      return ids.size();
    }();
    if (!warnings.empty()) j["warnings"] = warnings;
    *json = Dup(j.dump(2));
  });
}

}  // extern "C"

// ladiar command-line front end. Talks to the library only through ladiar.h.

#include "ladiar/ladiar.h"

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

// Runtime failure raised from a C API status; maps to exit code 1.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void Check(ladiar_status st, const std::string& context) {
  if (st != LADIAR_OK) {
    throw RuntimeFailure(context + ": " + ladiar_status_name(st) + ": " + ladiar_last_error());
  }
}

int Verbosity() {
  const char* v = std::getenv("LADIAR_VERBOSE");
  return v ? std::atoi(v) : 0;
}

void Log(const std::string& msg) {
  if (Verbosity() > 0) std::cerr << "ladiar: " << msg << '\n';
}

void PrintJson(char* json) {
  std::cout << json << '\n';
  ladiar_string_free(json);
}

struct MatrixDeleter {
  void operator()(ladiar_matrix* m) const { ladiar_matrix_destroy(m); }
};
struct ProviderDeleter {
  void operator()(ladiar_provider* p) const { ladiar_provider_destroy(p); }
};
struct ResultDeleter {
  void operator()(ladiar_result* r) const { ladiar_result_destroy(r); }
};
using MatrixPtr = std::unique_ptr<ladiar_matrix, MatrixDeleter>;
using ProviderPtr = std::unique_ptr<ladiar_provider, ProviderDeleter>;
using ResultPtr = std::unique_ptr<ladiar_result, ResultDeleter>;

MatrixPtr LoadMatrix(const std::string& path) {
  ladiar_matrix* m = nullptr;
  Check(ladiar_matrix_read(path.c_str(), &m), "reading " + path);
  return MatrixPtr(m);
}

ProviderPtr LoadProvider(const std::string& path) {
  ladiar_provider* p = nullptr;
  Check(ladiar_provider_load(path.c_str(), &p), "loading provider " + path);
  return ProviderPtr(p);
}

std::string JsonString(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (static_cast<unsigned char>(c) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\u%04x", c);
      out += buf;
    } else {
      out += c;
    }
  }
  return out + "\"";
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  ladiar_simulation_options opts{};
  std::string out_dir;
  std::string file_id = "rec";
  std::string format = "binary";
};

void AddSimulate(CLI::App& app, SimulateArgs& a, std::function<void()>& run) {
  ladiar_simulation_options_default(&a.opts);
  CLI::App* sub = app.add_subcommand("simulate", "Generate a synthetic recording and oracle attractors");
  sub->add_option("--out", a.out_dir, "Output directory")->required();
  sub->add_option("--speakers", a.opts.speakers, "Number of speakers")->capture_default_str();
  sub->add_option("--duration", a.opts.duration_sec, "Recording length in seconds")
      ->capture_default_str();
  sub->add_option("--frame-duration", a.opts.frame_duration, "Frame hop in seconds")
      ->capture_default_str();
  sub->add_option("--beta", a.opts.beta, "Mean silence between utterances (s); 0 picks a default");
  sub->add_option("--utt-min", a.opts.utt_min, "Shortest utterance (s)")->capture_default_str();
  sub->add_option("--utt-max", a.opts.utt_max, "Longest utterance (s)")->capture_default_str();
  sub->add_option("--sigma", a.opts.sigma, "Embedding noise")->capture_default_str();
  sub->add_option("--sigma-attr", a.opts.sigma_attr, "Converted-vector noise")
      ->capture_default_str();
  sub->add_option("--dim", a.opts.dim, "Embedding dimension")->capture_default_str();
  sub->add_option("--kappa", a.opts.kappa, "Embedding gain")->capture_default_str();
  sub->add_option("--seed", a.opts.seed, "Random seed")->capture_default_str();
  sub->add_option("--cap", a.opts.cap, "Max attractors per subsequence and globally; 0 = none");
  sub->add_option("--subseq-sec", a.opts.subseq_sec, "Subsequence length in seconds")
      ->capture_default_str();
  sub->add_option("--file-id", a.file_id, "Recording id used in the RTTM")->capture_default_str();
  sub->add_option("--format", a.format, "Matrix file format")
      ->check(CLI::IsMember({"binary", "text"}))
      ->capture_default_str();
  sub->callback([&] {
    run = [&] {
      a.opts.file_id = a.file_id.c_str();
      a.opts.binary = a.format == "binary" ? 1 : 0;
      char* json = nullptr;
      Check(ladiar_simulate(&a.opts, a.out_dir.c_str(), &json), "simulate");
      PrintJson(json);
    };
  });
}

// ---- diarize ----------------------------------------------------------------

struct DiarizeArgs {
  ladiar_pipeline_options opts{};
  std::string provider;
  std::string embeddings;
  std::string mode = "switch";
  std::string out;
  std::string posteriors;
  std::string file_id = "rec";
  double frame_duration = 0.0;
};

void AddDiarize(CLI::App& app, DiarizeArgs& a, std::function<void()>& run) {
  ladiar_pipeline_options_default(&a.opts);
  CLI::App* sub = app.add_subcommand("diarize", "Run global, local or switched inference");
  sub->add_option("--provider", a.provider, "Provider manifest (provider.json)")->required();
  sub->add_option("--embeddings", a.embeddings, "Embedding matrix; defaults to the manifest's");
  sub->add_option("--out", a.out, "Output RTTM path")->required();
  sub->add_option("--posteriors", a.posteriors, "Also write the posterior matrix here");
  sub->add_option("--file-id", a.file_id, "Recording id used in the RTTM")->capture_default_str();
  sub->add_option("--mode", a.mode, "Inference mode")
      ->check(CLI::IsMember({"global", "local", "switch"}))
      ->capture_default_str();
  sub->add_option("--subseq-sec", a.opts.subseq_sec,
                  "Subsequence length in seconds; must match the provider");
  sub->add_option("--delta", a.opts.margin, "Affinity margin")->capture_default_str();
  sub->add_option("--switch-threshold", a.opts.switch_threshold,
                  "Global count at which the local branch takes over")
      ->capture_default_str();
  sub->add_option("--threshold", a.opts.activity_threshold, "Activity threshold")
      ->capture_default_str();
  sub->add_option("--frame-duration", a.frame_duration,
                  "Frame hop in seconds; defaults to the provider's");
  sub->add_option("--seed", a.opts.seed, "Clustering seed")->capture_default_str();
  sub->callback([&] {
    run = [&] {
      a.opts.mode = a.mode == "global" ? LADIAR_MODE_GLOBAL
                    : a.mode == "local" ? LADIAR_MODE_LOCAL
                                        : LADIAR_MODE_SWITCH;
      ProviderPtr provider = LoadProvider(a.provider);
      std::string emb_path = a.embeddings;
      if (emb_path.empty()) {
        const char* p = ladiar_provider_embeddings_path(provider.get());
        if (!p) throw RuntimeFailure("no --embeddings given and the manifest names none");
        emb_path = p;
      }
      MatrixPtr emb = LoadMatrix(emb_path);
      Log("diarizing " + std::to_string(ladiar_matrix_rows(emb.get())) + " frames");

      ladiar_result* raw = nullptr;
      Check(ladiar_diarize(emb.get(), a.frame_duration, provider.get(), &a.opts, &raw), "diarize");
      ResultPtr result(raw);
      Check(ladiar_result_write_rttm(result.get(), a.file_id.c_str(), a.out.c_str()),
            "writing " + a.out);
      if (!a.posteriors.empty()) {
        ladiar_matrix* post = nullptr;
        Check(ladiar_result_posteriors(result.get(), &post), "posteriors");
        MatrixPtr owned(post);
        Check(ladiar_matrix_write(owned.get(), a.posteriors.c_str(), 1), "writing " + a.posteriors);
      }
      std::cout << "{\n"
                << "  \"speakers\": " << ladiar_result_speaker_count(result.get()) << ",\n"
                << "  \"branch\": "
                << (ladiar_result_branch(result.get()) == LADIAR_BRANCH_LOCAL ? "\"local\""
                                                                              : "\"global\"")
                << ",\n"
                << "  \"mode\": " << JsonString(a.mode) << ",\n"
                << "  \"segments\": " << ladiar_result_segment_count(result.get()) << ",\n"
                << "  \"rttm\": " << JsonString(a.out) << "\n}\n";
    };
  });
}

// ---- count ------------------------------------------------------------------

struct CountArgs {
  std::string pool;
  std::string provider;
  std::vector<int> groups;
  double margin = 0.5;
};

void AddCount(CLI::App& app, CountArgs& a, std::function<void()>& run) {
  CLI::App* sub = app.add_subcommand("count", "Estimate the speaker count from converted vectors");
  auto* pool = sub->add_option("--pool", a.pool, "Matrix file, one converted vector per row");
  auto* prov = sub->add_option("--provider", a.provider, "Take the pool from a provider manifest");
  pool->excludes(prov);
  sub->add_option("--groups", a.groups, "Subsequence id per pool row (comma separated)")
      ->delimiter(',')
      ->needs(pool);
  sub->add_option("--delta", a.margin, "Affinity margin")->capture_default_str();
  sub->callback([&] {
    if (a.pool.empty() && a.provider.empty()) {
      throw CLI::RequiredError("count needs --pool or --provider");
    }
    run = [&] {
      char* json = nullptr;
      if (!a.provider.empty()) {
        ProviderPtr p = LoadProvider(a.provider);
        Check(ladiar_provider_count_json(p.get(), a.margin, &json), "count");
      } else {
        MatrixPtr m = LoadMatrix(a.pool);
        Check(ladiar_count_json(m.get(), a.groups.empty() ? nullptr : a.groups.data(),
                                a.groups.size(), a.margin, &json),
              "count");
      }
      PrintJson(json);
    };
  });
}

// ---- losses -----------------------------------------------------------------

struct LossesArgs {
  std::string posteriors;
  std::string labels;
  std::vector<double> existence;
  std::string pool;
  std::vector<int> pool_labels;
  double margin = 0.5;
  double alpha = 1.0;
  double gamma = 1.0;
  size_t subseq_frames = 0;
  bool exhaustive = false;
};

void AddLosses(CLI::App& app, LossesArgs& a, std::function<void()>& run) {
  CLI::App* sub = app.add_subcommand("losses", "Evaluate the training objectives on fixed outputs");
  sub->add_option("--posteriors", a.posteriors, "Posterior matrix (T x S)")->required();
  sub->add_option("--labels", a.labels, "Binary label matrix (T x S)")->required();
  sub->add_option("--existence", a.existence, "S+1 existence probabilities (comma separated)")
      ->delimiter(',');
  auto* pool = sub->add_option("--pool", a.pool, "Converted vectors, one per row");
  sub->add_option("--pool-labels", a.pool_labels, "Speaker per pool row (comma separated)")
      ->delimiter(',')
      ->needs(pool);
  pool->needs(sub->get_option("--pool-labels"));
  sub->add_option("--delta", a.margin, "Pairwise margin")->capture_default_str();
  sub->add_option("--alpha", a.alpha, "Existence loss weight")->capture_default_str();
  sub->add_option("--gamma", a.gamma, "Pairwise loss weight")->capture_default_str();
  sub->add_option("--subseq-frames", a.subseq_frames, "Frames per subsequence for local terms");
  sub->add_flag("--exhaustive", a.exhaustive, "Enumerate permutations instead of assignment");
  sub->callback([&] {
    run = [&] {
      MatrixPtr post = LoadMatrix(a.posteriors);
      MatrixPtr labels = LoadMatrix(a.labels);
      MatrixPtr pool_m;
      if (!a.pool.empty()) pool_m = LoadMatrix(a.pool);
      ladiar_loss_inputs in;
      ladiar_loss_inputs_default(&in);
      in.posteriors = post.get();
      in.labels = labels.get();
      if (!a.existence.empty()) {
        in.existence = a.existence.data();
        in.n_existence = a.existence.size();
      }
      in.pool = pool_m.get();
      in.pool_labels = a.pool_labels.empty() ? nullptr : a.pool_labels.data();
      in.n_pool_labels = a.pool_labels.size();
      in.margin = a.margin;
      in.alpha = a.alpha;
      in.gamma = a.gamma;
      in.subseq_frames = a.subseq_frames;
      in.exhaustive = a.exhaustive ? 1 : 0;
      char* json = nullptr;
      Check(ladiar_losses_json(&in, &json), "losses");
      PrintJson(json);
    };
  });
}

// ---- score ------------------------------------------------------------------

struct ScoreArgs {
  std::string ref;
  std::string hyp;
  double collar = 0.25;
  bool exclude_overlap = false;
  bool no_overlap_exclusion = false;
};

void AddScore(CLI::App& app, ScoreArgs& a, std::function<void()>& run) {
  CLI::App* sub = app.add_subcommand("score", "Compute DER and JER between two RTTM files");
  sub->add_option("--ref", a.ref, "Reference RTTM")->required();
  sub->add_option("--hyp", a.hyp, "Hypothesis RTTM")->required();
  sub->add_option("--collar", a.collar, "No-score collar in seconds")->capture_default_str();
  auto* ex = sub->add_flag("--exclude-overlap", a.exclude_overlap, "Skip overlapped reference speech");
  sub->add_flag("--no-overlap-exclusion", a.no_overlap_exclusion, "Score overlapped speech (default)")
      ->excludes(ex);
  sub->callback([&] {
    run = [&] {
      char* json = nullptr;
      Check(ladiar_score_json(a.ref.c_str(), a.hyp.c_str(), a.collar, a.exclude_overlap ? 1 : 0,
                              &json),
            "score");
      PrintJson(json);
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ladiar: attractor-based speaker diarization toolkit"};
  app.set_version_flag("--version", std::string(ladiar_version()));
  app.require_subcommand(1);

  std::function<void()> run;
  SimulateArgs simulate;
  DiarizeArgs diarize;
  CountArgs count;
  LossesArgs losses;
  ScoreArgs score;
  AddSimulate(app, simulate, run);
  AddDiarize(app, diarize, run);
  AddCount(app, count, run);
  AddLosses(app, losses, run);
  AddScore(app, score, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run) run();
  } catch (const std::exception& e) {
    std::cerr << "ladiar: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

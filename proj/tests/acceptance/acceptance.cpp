// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. Tolerances and sizes are fixed below.

#include "ladiar/clustering.hpp"
#include "ladiar/counting.hpp"
#include "ladiar/io.hpp"
#include "ladiar/losses.hpp"
#include "ladiar/metrics.hpp"
#include "ladiar/pipeline.hpp"
#include "ladiar/simulator.hpp"

#include "generators.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef LADIAR_CLI_PATH
#error "LADIAR_CLI_PATH must name the command-line binary"
#endif

using namespace ladiar;
namespace fs = std::filesystem;

namespace {

constexpr Index kSubseqFrames = 50;     // 5 s at 0.1 s frames
constexpr Index kRecordingFrames = 3000;  // 300 s
constexpr double kCollar = 0.25;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- shared scenario --------------------------------------------------------

struct Run {
  GroundTruth gt;
  OracleOutput oracle;
};

Run Scenario(int speakers, std::uint64_t seed, double sigma, std::optional<int> cap) {
  SimulationConfig sc;
  sc.speakers = speakers;
  sc.frames = kRecordingFrames;
  sc.beta = SilenceMeanForSpeakers(speakers);
  sc.sigma = sigma;
  sc.dim = 16;
  sc.seed = seed;
  Run r{Simulate(sc), {}};
  OracleOptions opt;
  opt.cap = cap;
  opt.sigma_attr = sigma;
  opt.seed = seed ^ 0x5eedULL;
  r.oracle = OracleProvide(r.gt, PartitionFrames(kRecordingFrames, kSubseqFrames), opt);
  return r;
}

PipelineConfig Pipeline() {
  PipelineConfig cfg;
  cfg.subseq_len = kSubseqFrames;
  return cfg;
}

ScoringReport ScoreAgainstTruth(const Run& run, const DiarizationResult& r) {
  DerOptions o;
  o.collar = kCollar;
  return Der(LabelSegments(ActivitySegments(run.gt.activity, 0.1), "ref"),
             LabelSegments(r.segments, "hyp"), o);
}

// ---- 1 ----------------------------------------------------------------------

Outcome OracleExactness() {
  const auto start = Clock::now();
  int exact_count = 0, zero_der = 0;
  double worst = 0.0;
  for (int s = 1; s <= 8; ++s) {
    for (std::uint64_t i = 0; i < 20; ++i) {
      const Run run = Scenario(s, 100 * static_cast<std::uint64_t>(s) + i, 0.0, std::nullopt);
      const auto r = InferLocal(run.gt.embeddings, run.oracle.provider, Pipeline());
      const auto score = ScoreAgainstTruth(run, r);
      exact_count += r.speaker_count == ActiveSpeakerCount(run.gt.activity);
      zero_der += score.der == 0.0;
      worst = std::max(worst, score.der);
    }
  }
  const double secs = Seconds(start);
  return {exact_count == 160 && zero_der == 160 && secs < 60.0,
          "exact count " + std::to_string(exact_count) + "/160, DER 0 in " +
              std::to_string(zero_der) + "/160 (max " + Fmt("%.3f", worst) + "%), " +
              Fmt("%.1f", secs) + " s (< 60)"};
}

// ---- 2 ----------------------------------------------------------------------

Outcome NoisyRobustness() {
  int accepted = 0, rejected = 0, exact = 0;
  double der_sum = 0.0;
  const auto part = PartitionFrames(kRecordingFrames, kSubseqFrames);
  for (std::uint64_t seed = 0; accepted < 100; ++seed) {
    const Run run = Scenario(6, 2000 + seed, 0.05, 4);
    const auto per_sub = ActiveSpeakersPerSubsequence(run.gt.activity, part);
    if (*std::max_element(per_sub.begin(), per_sub.end()) > 4) {
      ++rejected;
      continue;
    }
    ++accepted;
    const auto r = InferLocal(run.gt.embeddings, run.oracle.provider, Pipeline());
    exact += r.speaker_count == ActiveSpeakerCount(run.gt.activity);
    der_sum += ScoreAgainstTruth(run, r).der;
  }
  const double mean_der = der_sum / 100.0;
  // For information only: the same seeds without the per-subsequence filter.
  int all_exact = 0;
  double all_der = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Run run = Scenario(6, 2000 + seed, 0.05, 4);
    const auto r = InferLocal(run.gt.embeddings, run.oracle.provider, Pipeline());
    all_exact += r.speaker_count == ActiveSpeakerCount(run.gt.activity);
    all_der += ScoreAgainstTruth(run, r).der;
  }
  return {exact >= 95 && mean_der <= 2.0,
          "exact count " + std::to_string(exact) + "/100 (>= 95), mean DER " +
              Fmt("%.3f", mean_der) + "% (<= 2.0); " + std::to_string(rejected) +
              " recordings with > 4 speakers in a subsequence skipped; unfiltered seeds: " +
              std::to_string(all_exact) + "/100 exact, mean DER " + Fmt("%.3f", all_der / 100.0) +
              "%"};
}

// ---- 3 ----------------------------------------------------------------------

Outcome Saturation() {
  std::vector<std::pair<int, int>> global_pairs, local_pairs;
  int global_over = 0, local_exact = 0;
  for (int s : {5, 6}) {
    for (std::uint64_t i = 0; i < 50; ++i) {
      const Run run = Scenario(s, 3000 + 100 * static_cast<std::uint64_t>(s) + i, 0.05, 4);
      const int truth = ActiveSpeakerCount(run.gt.activity);
      const auto g = InferGlobal(run.gt.embeddings, run.oracle.provider, Pipeline());
      const auto l = InferLocal(run.gt.embeddings, run.oracle.provider, Pipeline());
      global_pairs.emplace_back(g.speaker_count, truth);
      local_pairs.emplace_back(l.speaker_count, truth);
      global_over += g.speaker_count > 4;
      local_exact += l.speaker_count == truth;
    }
  }
  std::cout << "  speaker-count confusion, global attractors (rows: estimated, columns: true)\n"
            << CountConfusionOf(global_pairs).Render(6)
            << "  speaker-count confusion, local attractors (rows: estimated, columns: true)\n"
            << CountConfusionOf(local_pairs).Render(6);
  return {global_over == 0 && local_exact >= 90,
          "global > 4 in " + std::to_string(global_over) + "/100 (== 0), local exact " +
              std::to_string(local_exact) + "/100 (>= 90)"};
}

// ---- 4 ----------------------------------------------------------------------

Outcome LossEquivalence() {
  Rng rng(404);
  double worst_loss = 0.0, worst_der = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Index t = gen::IntIn(rng, 1, 20);
    const Index s = gen::IntIn(rng, 1, 5);
    const PosteriorMatrix p{gen::Probabilities(rng, t, s)};
    const ActivityMatrix y = gen::Labels(rng, t, s);
    const double a = DiarizationLoss(p, y, DiarLossMode::kAssignment).loss;
    const double e = DiarizationLoss(p, y, DiarLossMode::kExhaustive).loss;
    worst_loss = std::max(worst_loss, std::abs(a - e));

    const auto ref = gen::Segments(rng, gen::IntIn(rng, 1, 5), 30.0);
    auto hyp = gen::Segments(rng, gen::IntIn(rng, 1, 5), 30.0);
    for (auto& seg : hyp) seg.speaker = "h" + seg.speaker;
    DerOptions assign, exhaustive;
    assign.collar = exhaustive.collar = kCollar;
    exhaustive.mapping = MappingMode::kExhaustive;
    const auto da = Der(ref, hyp, assign);
    const auto de = Der(ref, hyp, exhaustive);
    if (da.scorable != de.scorable) return {false, "scorability differs between mapping modes"};
    if (da.scorable) worst_der = std::max(worst_der, std::abs(da.der - de.der));
  }
  return {worst_loss <= 1e-9 && worst_der <= 1e-9,
          "200 instances, max |loss diff| " + Fmt("%.2e", worst_loss) + ", max |DER diff| " +
              Fmt("%.2e", worst_der) + " (<= 1e-9)"};
}

// ---- 5 ----------------------------------------------------------------------

// Block b holds sizes[b] copies of axis b, the j-th copy in subsequence j, so
// the modified affinity is exactly block-constant.
bool CountsComposition(const std::vector<int>& sizes) {
  const Index dim = 8;
  Index n = 0;
  for (int v : sizes) n += v;
  ConvertedVectorPool pool;
  pool.columns = Matrix::Zero(dim, n);
  std::map<Index, Index> next;
  Index col = 0;
  for (size_t b = 0; b < sizes.size(); ++b) {
    for (int j = 0; j < sizes[b]; ++j, ++col) {
      pool.columns(static_cast<Index>(b), col) = 1.0;
      pool.origin.push_back({j, next[j]++});
    }
  }
  std::vector<int> local;
  for (const auto& [sub, members] : next) local.push_back(static_cast<int>(members));
  const int count =
      ApplyCountFloor(CountEigenratioFiltered(EigvalsDesc(BuildModifiedAffinity(pool, 0.5))), local);
  return count == static_cast<int>(sizes.size());
}

Outcome EigenCounting() {
  // Compositions of n <= 24 into at most 8 ordered blocks, split across
  // threads by the size of the first block.
  std::vector<std::future<std::pair<long, long>>> jobs;
  for (int first = 1; first <= 24; ++first) {
    jobs.push_back(std::async(std::launch::async, [first] {
      long total = 0, correct = 0;
      std::vector<int> sizes{first};
      std::function<void(int)> rec = [&](int remaining) {
        ++total;
        correct += CountsComposition(sizes);
        if (sizes.size() == 8) return;
        for (int p = 1; p <= remaining; ++p) {
          sizes.push_back(p);
          rec(remaining - p);
          sizes.pop_back();
        }
      };
      rec(24 - first);
      return std::make_pair(total, correct);
    }));
  }
  long total = 0, correct = 0;
  for (auto& j : jobs) {
    const auto [t, c] = j.get();
    total += t;
    correct += c;
  }
  return {total == 1271625 && correct == total,
          std::to_string(correct) + "/" + std::to_string(total) + " compositions counted exactly"};
}

// ---- 6 ----------------------------------------------------------------------

Outcome ConstraintSatisfaction() {
  Rng rng(606);
  int violations = 0, increases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index d = gen::IntIn(rng, 2, 8);
    CannotLinkSet links;
    Index n = 0;
    const int groups = gen::IntIn(rng, 1, 12);
    for (int g = 0; g < groups; ++g) {
      std::vector<Index> members;
      for (int j = gen::IntIn(rng, 1, 5); j > 0; --j) members.push_back(n++);
      links.groups.push_back(members);
    }
    const Matrix v = gen::Gaussian(rng, d, n);
    const int k = gen::IntIn(rng, static_cast<int>(links.max_group_size()), static_cast<int>(n));
    const auto a = ClcKmeans(v, k, links, {rng.Fork()});
    for (const auto& g : links.groups) {
      std::set<int> seen;
      for (Index i : g) violations += !seen.insert(a.labels[static_cast<size_t>(i)]).second;
    }
    for (size_t i = 1; i < a.inertia_trace.size(); ++i) {
      increases += a.inertia_trace[i] > a.inertia_trace[i - 1] + 1e-12;
    }
  }
  return {violations == 0 && increases == 0,
          "1000 instances, " + std::to_string(violations) + " cannot-link violations, " +
              std::to_string(increases) + " inertia increases"};
}

// ---- 7 ----------------------------------------------------------------------

Outcome LossMinima() {
  Rng rng(707);
  double worst_diar = 0.0, worst_exist = 0.0, worst_pair = 0.0, worst_sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index t = gen::IntIn(rng, 1, 40);
    const int s = gen::IntIn(rng, 1, 6);
    const ActivityMatrix y = gen::Labels(rng, t, s);
    const PosteriorMatrix p{y.as_real()};
    worst_diar = std::max(worst_diar, DiarizationLoss(p, y).loss);

    std::vector<double> exist(static_cast<size_t>(s) + 1, 1.0);
    exist.back() = 0.0;
    worst_exist = std::max(worst_exist, ExistenceLoss(exist, s));

    // Converted vectors equal to their speaker's axis, from several subsequences.
    const int subs = gen::IntIn(rng, 1, 5);
    Matrix pool(8, 0);
    SpeakerCorrespondence corr;
    for (int l = 0; l < subs; ++l) {
      for (int who : gen::Permutation(rng, s)) {
        if (rng.Uniform() < 0.3) continue;
        pool.conservativeResize(8, pool.cols() + 1);
        pool.col(pool.cols() - 1) = Matrix::Identity(8, 8).col(who);
        corr.labels.push_back(who);
      }
    }
    worst_pair = std::max(worst_pair, PairwiseLoss(pool, corr, 0, 0.5));

    const double d = rng.Uniform(), e = rng.Uniform(), pr = rng.Uniform();
    std::vector<double> ld(static_cast<size_t>(subs)), le(static_cast<size_t>(subs));
    double local_mean = 0.0;
    for (int l = 0; l < subs; ++l) {
      ld[static_cast<size_t>(l)] = rng.Uniform();
      le[static_cast<size_t>(l)] = rng.Uniform();
      local_mean += ld[static_cast<size_t>(l)] + le[static_cast<size_t>(l)];
    }
    local_mean /= subs;
    const auto b = CombineLosses(d, e, pr, 1.0, 1.0, ld, le);
    worst_sum = std::max({worst_sum, std::abs(b.global_total - (d + e)),
                          std::abs(b.local_total - (local_mean + pr)),
                          std::abs(b.both_total - (d + e + local_mean + pr))});
  }
  return {worst_diar < 1e-6 && worst_exist < 1e-6 && worst_pair == 0.0 && worst_sum <= 1e-12,
          "max diar " + Fmt("%.2e", worst_diar) + ", max exist " + Fmt("%.2e", worst_exist) +
              " (< 1e-6), max pair " + Fmt("%g", worst_pair) + " (== 0), combined sums within " +
              Fmt("%.1e", worst_sum)};
}

// ---- 8 ----------------------------------------------------------------------

Outcome MetricInvariants() {
  Rng rng(808);
  int failures = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto ref = gen::Segments(rng, gen::IntIn(rng, 1, 5), 60.0);
    const auto hyp = gen::Segments(rng, gen::IntIn(rng, 1, 5), 60.0);
    DerOptions o;
    o.collar = rng.Uniform(0.0, 0.5);
    const auto self = Der(ref, ref, o);
    if (self.scorable && self.der != 0.0) ++failures;
    const auto r = Der(ref, hyp, o);
    if (!r.scorable) continue;
    if (std::abs(r.der - (r.miss + r.fa + r.confusion)) > 1e-9) ++failures;
    const auto perm = gen::Permutation(rng, 5);
    auto renamed = hyp;
    for (auto& s : renamed) s.speaker = "p" + std::to_string(perm[static_cast<size_t>(s.speaker[1] - '0')]);
    if (std::abs(Der(ref, renamed, o).der - r.der) > 1e-9) ++failures;
  }
  const auto plain = Der({{"A", 0, 10}}, {{"A", 0, 8}}, {});
  DerOptions c;
  c.collar = 0.25;
  const auto collared = Der({{"A", 0, 10}}, {{"A", 0, 8}}, c);
  const bool examples = std::abs(plain.der - 20.0) <= 1e-9 &&
                        std::abs(collared.der - 1.5 / 9.0 * 100.0) <= 1e-9;
  return {failures == 0 && examples,
          "500 random pairs, " + std::to_string(failures) + " invariant failures; collar examples " +
              Fmt("%.4f", plain.der) + "% and " + Fmt("%.4f", collared.der) +
              "% (expected 20.0000% and 16.6667%)"};
}

// ---- 9 ----------------------------------------------------------------------

// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
double SignTestP(int wins, int n) {
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                  n * std::log(2.0));
  }
  return p;
}

Outcome OverlapDirection() {
  const std::array<double, 5> betas{2, 5, 9, 13, 17};
  std::array<int, 4> wins{}, decisive{};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::array<double, 5> ratio{};
    for (size_t b = 0; b < betas.size(); ++b) {
      SimulationConfig cfg;
      cfg.speakers = 4;
      cfg.frames = kRecordingFrames;
      cfg.beta = betas[b];
      cfg.seed = 9000 + seed;
      ratio[b] = OverlapRatio(GenActivity(cfg));
    }
    for (size_t b = 0; b + 1 < betas.size(); ++b) {
      if (ratio[b] == ratio[b + 1]) continue;
      ++decisive[b];
      wins[b] += ratio[b] > ratio[b + 1];
    }
  }
  bool pass = true;
  std::string detail = "4 speakers, 50 paired seeds;";
  for (size_t b = 0; b + 1 < betas.size(); ++b) {
    const double p = SignTestP(wins[b], decisive[b]);
    pass &= p < 0.01;
    detail += " beta " + Fmt("%g", betas[b]) + "->" + Fmt("%g", betas[b + 1]) + ": " +
              std::to_string(wins[b]) + "/" + std::to_string(decisive[b]) + " p=" +
              Fmt("%.1e", p) + ";";
  }
  detail.pop_back();
  return {pass, detail + " (p < 0.01)"};
}

// ---- 10 ---------------------------------------------------------------------

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Invocation {
  int status = -1;
  std::string stdout_text;
};

Invocation RunCli(const std::string& args) {
  const std::string cmd = std::string(LADIAR_CLI_PATH) + " " + args + " 2>/dev/null";
  Invocation r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.stdout_text.append(buf.data(), n);
  r.status = pclose(pipe);
  return r;
}

// stdout plus the bytes of every file under `dir`, in path order.
std::string Snapshot(const Invocation& inv, const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[e.path().string()] = Slurp(e.path());
  }
  std::string out = std::to_string(inv.status) + "\n" + inv.stdout_text;
  for (const auto& [path, bytes] : files) out += "\n== " + path + "\n" + bytes;
  return out;
}

Outcome CliDeterminism() {
  const fs::path root = fs::temp_directory_path() / "ladiar_acceptance_cli";
  fs::remove_all(root);
  const fs::path sim = root / "sim";
  const fs::path work = root / "work";
  fs::create_directories(work);
  const std::string s = sim.string(), w = work.string();

  const std::vector<std::pair<std::string, std::string>> steps{
      {"simulate", "simulate --out " + s + " --speakers 5 --duration 120 --seed 3 --cap 4"},
      {"diarize", "diarize --provider " + s + "/provider.json --out " + w +
                      "/hyp.rttm --posteriors " + w + "/post.emb --mode switch --seed 1"},
      {"count", "count --provider " + s + "/provider.json"},
      {"losses", "losses --posteriors " + w + "/post.emb --labels " + w +
                     "/labels.emb --existence 0.9,0.8,0.1 --pool " + w +
                     "/pool.emb --pool-labels 0,1,0,1 --subseq-frames 50"},
      {"score", "score --ref " + s + "/ref.rttm --hyp " + w + "/hyp.rttm --collar 0.25"},
  };
  std::vector<std::string> failed;
  for (const auto& [name, args] : steps) {
    const fs::path watched = name == "simulate" ? sim : work;
    std::string first;
    for (int attempt = 0; attempt < 2; ++attempt) {
      const Invocation inv = RunCli(args);
      if (inv.status != 0) {
        failed.push_back(name + " (exit " + std::to_string(inv.status) + ")");
        break;
      }
      const std::string snap = Snapshot(inv, watched);
      if (attempt == 0) {
        first = snap;
      } else if (snap != first) {
        failed.push_back(name);
      }
    }
    if (name == "diarize" && fs::exists(work / "post.emb")) {
      // Labels and a small pool for the losses step, derived from this run.
      const Matrix post = ReadMatrix((work / "post.emb").string());
      WriteMatrix((work / "labels.emb").string(),
                  (post.array() > 0.5).cast<double>().matrix().leftCols(std::min<Index>(post.cols(), 2)),
                  MatrixFormat::kBinary);
      WriteMatrix((work / "post2.emb").string(), post.leftCols(std::min<Index>(post.cols(), 2)),
                  MatrixFormat::kBinary);
      fs::rename(work / "post2.emb", work / "post.emb");
      Matrix pool(4, 3);
      pool << 1, 0, 0, 0, 1, 0, 0.9, 0.1, 0, 0.1, 0.9, 0;
      WriteMatrix((work / "pool.emb").string(), pool, MatrixFormat::kText);
    }
  }
  std::string detail = "simulate, diarize, count, losses, score each run twice";
  if (!failed.empty()) {
    detail += "; differing or failing:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle end-to-end exactness", OracleExactness},
      {"noisy oracle robustness", NoisyRobustness},
      {"global saturation, local recovery", Saturation},
      {"loss and DER mapping equivalence", LossEquivalence},
      {"eigenvalue counting exactness", EigenCounting},
      {"cannot-link constraint satisfaction", ConstraintSatisfaction},
      {"loss minima at ground truth", LossMinima},
      {"metric invariants", MetricInvariants},
      {"simulator overlap direction", OverlapDirection},
      {"CLI determinism", CliDeterminism},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": "
              << o.detail << " [" << Fmt("%.1f", Seconds(start)) << " s]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

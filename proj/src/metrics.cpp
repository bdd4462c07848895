#include "ladiar/metrics.hpp"

#include "ladiar/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace ladiar {

namespace {

// Scoring works on integer ticks of 0.1 ms so that collar arithmetic is exact.
using Tick = std::int64_t;
constexpr double kTicksPerSecond = 10000.0;

Tick ToTick(double seconds) { return static_cast<Tick>(std::llround(seconds * kTicksPerSecond)); }
double ToSeconds(Tick t) { return static_cast<double>(t) / kTicksPerSecond; }

struct Interval {
  Tick begin;
  Tick end;
};
using Track = std::vector<Interval>;

Track Merge(Track t) {
  std::sort(t.begin(), t.end(), [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  Track out;
  for (const Interval& i : t) {
    if (i.end <= i.begin) continue;
    if (!out.empty() && i.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, i.end);
    } else {
      out.push_back(i);
    }
  }
  return out;
}

struct Tracks {
  std::vector<std::string> names;
  std::vector<Track> tracks;
};

Tracks ToTracks(const std::vector<LabeledSegment>& segs) {
  std::map<std::string, Track> by;
  for (const auto& s : segs) {
    Require(std::isfinite(s.onset) && std::isfinite(s.offset) && s.offset >= s.onset,
            ErrorCode::kInvalidArgument,
            "segment of speaker '" + s.speaker + "' has offset before onset");
    by[s.speaker].push_back({ToTick(s.onset), ToTick(s.offset)});
  }
  Tracks out;
  for (auto& [name, track] : by) {
    Track merged = Merge(std::move(track));
    if (merged.empty()) continue;
    out.names.push_back(name);
    out.tracks.push_back(std::move(merged));
  }
  return out;
}

// Elementary intervals between consecutive change points, with per-speaker
// activity flags.
struct Grid {
  std::vector<Tick> points;
  std::vector<std::vector<char>> ref_on;  // [speaker][cell]
  std::vector<std::vector<char>> hyp_on;
  std::vector<char> scored;

  size_t cells() const { return points.empty() ? 0 : points.size() - 1; }
  double duration(size_t c) const { return ToSeconds(points[c + 1] - points[c]); }
};

std::vector<char> Mark(const std::vector<Tick>& points, const Track& track) {
  std::vector<char> on(points.size() > 0 ? points.size() - 1 : 0, 0);
  for (const Interval& i : track) {
    const auto b = std::lower_bound(points.begin(), points.end(), i.begin) - points.begin();
    const auto e = std::lower_bound(points.begin(), points.end(), i.end) - points.begin();
    for (auto c = b; c < e; ++c) on[static_cast<size_t>(c)] = 1;
  }
  return on;
}

Grid BuildGrid(const Tracks& ref, const Tracks& hyp, const DerOptions& opt) {
  Require(opt.collar >= 0.0, ErrorCode::kInvalidArgument, "collar must be >= 0");
  const Tick collar = ToTick(opt.collar);
  Track zones;
  std::vector<Tick> points;
  auto add_edges = [&](const Tracks& t) {
    for (const Track& track : t.tracks) {
      for (const Interval& i : track) {
        points.push_back(i.begin);
        points.push_back(i.end);
        if (collar > 0) {
          zones.push_back({i.begin - collar, i.begin + collar});
          zones.push_back({i.end - collar, i.end + collar});
        }
      }
    }
  };
  add_edges(ref);
  add_edges(hyp);
  zones = Merge(std::move(zones));
  for (const Interval& z : zones) {
    points.push_back(z.begin);
    points.push_back(z.end);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  Grid g;
  g.points = std::move(points);
  for (const Track& t : ref.tracks) g.ref_on.push_back(Mark(g.points, t));
  for (const Track& t : hyp.tracks) g.hyp_on.push_back(Mark(g.points, t));
  const std::vector<char> in_zone = Mark(g.points, zones);
  g.scored.assign(g.cells(), 1);
  for (size_t c = 0; c < g.cells(); ++c) {
    if (in_zone[c]) g.scored[c] = 0;
    if (opt.exclude_overlap) {
      int n = 0;
      for (const auto& on : g.ref_on) n += on[c];
      if (n >= 2) g.scored[c] = 0;
    }
  }
  return g;
}

// ref_to_hyp[r] = mapped hypothesis index or -1.
std::vector<int> MapSpeakers(const Matrix& overlap, MappingMode mode) {
  const Index nr = overlap.rows();
  const Index nh = overlap.cols();
  std::vector<int> ref_to_hyp(static_cast<size_t>(nr), -1);
  if (nr == 0 || nh == 0) return ref_to_hyp;

  if (mode == MappingMode::kAssignment) {
    if (nr <= nh) {
      const Assignment a = SolveAssignment(-overlap);
      for (Index r = 0; r < nr; ++r) ref_to_hyp[static_cast<size_t>(r)] = a.row_to_col[static_cast<size_t>(r)];
    } else {
      const Assignment a = SolveAssignment(-overlap.transpose());
      for (Index h = 0; h < nh; ++h) ref_to_hyp[static_cast<size_t>(a.row_to_col[static_cast<size_t>(h)])] = static_cast<int>(h);
    }
  } else {
    Require(std::min(nr, nh) <= 8, ErrorCode::kInvalidArgument,
            "exhaustive speaker mapping is limited to 8 speakers");
    // Every injective map from the smaller side into the larger one.
    const bool ref_rows = nr <= nh;
    const Index small = ref_rows ? nr : nh;
    const Index large = ref_rows ? nh : nr;
    auto gain = [&](Index i, Index j) { return ref_rows ? overlap(i, j) : overlap(j, i); };
    std::vector<int> cur(static_cast<size_t>(small)), best;
    std::vector<char> used(static_cast<size_t>(large), 0);
    double best_total = -std::numeric_limits<double>::infinity();
    std::function<void(Index, double)> rec = [&](Index i, double total) {
      if (i == small) {
        if (total > best_total) {
          best_total = total;
          best = cur;
        }
        return;
      }
      for (Index j = 0; j < large; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        used[static_cast<size_t>(j)] = 1;
        cur[static_cast<size_t>(i)] = static_cast<int>(j);
        rec(i + 1, total + gain(i, j));
        used[static_cast<size_t>(j)] = 0;
      }
    };
    rec(0, 0.0);
    for (Index i = 0; i < small; ++i) {
      const int j = best[static_cast<size_t>(i)];
      if (ref_rows) {
        ref_to_hyp[static_cast<size_t>(i)] = j;
      } else {
        ref_to_hyp[static_cast<size_t>(j)] = static_cast<int>(i);
      }
    }
  }
  // Pairs that never overlap are not a mapping.
  for (Index r = 0; r < nr; ++r) {
    int& h = ref_to_hyp[static_cast<size_t>(r)];
    if (h >= 0 && overlap(r, h) <= 0.0) h = -1;
  }
  return ref_to_hyp;
}

struct DerState {
  Tracks ref;
  Tracks hyp;
  std::vector<int> ref_to_hyp;
  ScoringReport report;
};

DerState ComputeDer(const std::vector<LabeledSegment>& ref_segs,
                    const std::vector<LabeledSegment>& hyp_segs, const DerOptions& options) {
  DerState st;
  st.ref = ToTracks(ref_segs);
  st.hyp = ToTracks(hyp_segs);
  const Grid g = BuildGrid(st.ref, st.hyp, options);
  const Index nr = static_cast<Index>(st.ref.tracks.size());
  const Index nh = static_cast<Index>(st.hyp.tracks.size());

  Matrix overlap = Matrix::Zero(nr, nh);
  for (size_t c = 0; c < g.cells(); ++c) {
    if (!g.scored[c]) continue;
    for (Index r = 0; r < nr; ++r) {
      if (!g.ref_on[static_cast<size_t>(r)][c]) continue;
      for (Index h = 0; h < nh; ++h) {
        if (g.hyp_on[static_cast<size_t>(h)][c]) overlap(r, h) += g.duration(c);
      }
    }
  }
  st.ref_to_hyp = MapSpeakers(overlap, options.mapping);

  ScoringReport& rep = st.report;
  for (size_t c = 0; c < g.cells(); ++c) {
    if (!g.scored[c]) continue;
    int n_ref = 0, n_hyp = 0, n_ok = 0;
    for (Index r = 0; r < nr; ++r) {
      if (!g.ref_on[static_cast<size_t>(r)][c]) continue;
      ++n_ref;
      const int h = st.ref_to_hyp[static_cast<size_t>(r)];
      if (h >= 0 && g.hyp_on[static_cast<size_t>(h)][c]) ++n_ok;
    }
    for (Index h = 0; h < nh; ++h) n_hyp += g.hyp_on[static_cast<size_t>(h)][c];
    const double d = g.duration(c);
    rep.ref_time += d * n_ref;
    rep.miss_time += d * std::max(0, n_ref - n_hyp);
    rep.fa_time += d * std::max(0, n_hyp - n_ref);
    rep.confusion_time += d * (std::min(n_ref, n_hyp) - n_ok);
    if (n_ref > 0) rep.scored_time += d;
  }
  for (Index r = 0; r < nr; ++r) {
    const int h = st.ref_to_hyp[static_cast<size_t>(r)];
    if (h >= 0) rep.mapping[st.hyp.names[static_cast<size_t>(h)]] = st.ref.names[static_cast<size_t>(r)];
  }
  rep.finalize();
  return st;
}

Tick Length(const Track& t) {
  Tick n = 0;
  for (const Interval& i : t) n += i.end - i.begin;
  return n;
}

Tick Intersection(const Track& a, const Track& b) {
  Tick n = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const Tick lo = std::max(a[i].begin, b[j].begin);
    const Tick hi = std::min(a[i].end, b[j].end);
    if (hi > lo) n += hi - lo;
    (a[i].end < b[j].end) ? ++i : ++j;
  }
  return n;
}

}  // namespace

std::vector<LabeledSegment> LabelSegments(const std::vector<Segment>& segments,
                                          const std::string& prefix) {
  std::vector<LabeledSegment> out;
  out.reserve(segments.size());
  for (const Segment& s : segments) {
    out.push_back({prefix + std::to_string(s.speaker), s.onset, s.offset});
  }
  return out;
}

void ScoringReport::finalize() {
  if (ref_time <= 0.0) {
    scorable = false;
    der = miss = fa = confusion = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  scorable = true;
  miss = 100.0 * miss_time / ref_time;
  fa = 100.0 * fa_time / ref_time;
  confusion = 100.0 * confusion_time / ref_time;
  der = 100.0 * (miss_time + fa_time + confusion_time) / ref_time;
}

ScoringReport Der(const std::vector<LabeledSegment>& ref, const std::vector<LabeledSegment>& hyp,
                  const DerOptions& options) {
  ScoringReport rep = ComputeDer(ref, hyp, options).report;
  rep.jer = Jer(ref, hyp);
  return rep;
}

std::vector<double> JerTerms(const std::vector<LabeledSegment>& ref,
                             const std::vector<LabeledSegment>& hyp) {
  const DerState st = ComputeDer(ref, hyp, DerOptions{});
  std::vector<double> terms;
  for (size_t r = 0; r < st.ref.tracks.size(); ++r) {
    const int h = st.ref_to_hyp[r];
    if (h < 0) {
      terms.push_back(100.0);
      continue;
    }
    const Track& a = st.ref.tracks[r];
    const Track& b = st.hyp.tracks[static_cast<size_t>(h)];
    const Tick inter = Intersection(a, b);
    const Tick uni = Length(a) + Length(b) - inter;
    terms.push_back(100.0 * static_cast<double>(uni - inter) / static_cast<double>(uni));
  }
  return terms;
}

double Jer(const std::vector<LabeledSegment>& ref, const std::vector<LabeledSegment>& hyp) {
  const std::vector<double> terms = JerTerms(ref, hyp);
  if (terms.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(terms.size());
}

ScoringReport ScoreRecordings(const Recordings& ref, const Recordings& hyp,
                              const DerOptions& options) {
  ScoringReport total;
  std::vector<double> jer_terms;
  std::map<std::string, bool> files;
  for (const auto& [id, segs] : ref) files[id] = true;
  for (const auto& [id, segs] : hyp) files[id] = true;
  static const std::vector<LabeledSegment> kEmpty;
  for (const auto& [id, unused] : files) {
    const auto r = ref.find(id);
    const auto h = hyp.find(id);
    const auto& rs = r == ref.end() ? kEmpty : r->second;
    const auto& hs = h == hyp.end() ? kEmpty : h->second;
    const ScoringReport one = ComputeDer(rs, hs, options).report;
    total.miss_time += one.miss_time;
    total.fa_time += one.fa_time;
    total.confusion_time += one.confusion_time;
    total.ref_time += one.ref_time;
    total.scored_time += one.scored_time;
    for (const auto& [hs_name, rs_name] : one.mapping) {
      total.mapping[id + "/" + hs_name] = id + "/" + rs_name;
    }
    const auto terms = JerTerms(rs, hs);
    jer_terms.insert(jer_terms.end(), terms.begin(), terms.end());
  }
  total.finalize();
  if (jer_terms.empty()) {
    total.jer = std::numeric_limits<double>::quiet_NaN();
  } else {
    double sum = 0.0;
    for (double t : jer_terms) sum += t;
    total.jer = sum / static_cast<double>(jer_terms.size());
  }
  return total;
}

int CountConfusion::total() const {
  int n = 0;
  for (const auto& row : matrix) {
    for (int v : row) n += v;
  }
  return n;
}

std::string CountConfusion::Render(int max_ref) const {
  max_ref = std::clamp(max_ref, 1, kSize - 1);
  std::ostringstream os;
  os << "pred\\ref";
  for (int c = 1; c <= max_ref; ++c) os << '\t' << c;
  os << '\n';
  bool zero_row = false;
  for (int c = 0; c < kSize; ++c) zero_row = zero_row || matrix[0][static_cast<size_t>(c)] > 0;
  for (int r = zero_row ? 0 : 1; r < kSize; ++r) {
    os << (r == kSize - 1 ? "7+" : std::to_string(r));
    for (int c = 1; c <= max_ref; ++c) os << '\t' << matrix[static_cast<size_t>(r)][static_cast<size_t>(c)];
    os << '\n';
  }
  return os.str();
}

CountConfusion CountConfusionOf(const std::vector<std::pair<int, int>>& predicted_reference) {
  CountConfusion cc;
  auto bin = [](int v) { return std::clamp(v, 0, CountConfusion::kSize - 1); };
  for (const auto& [pred, ref] : predicted_reference) {
    ++cc.matrix[static_cast<size_t>(bin(pred))][static_cast<size_t>(bin(ref))];
  }
  return cc;
}

}  // namespace ladiar

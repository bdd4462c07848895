#include "ladiar/clustering.hpp"

#include "ladiar/assignment.hpp"
#include "ladiar/random.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace ladiar {

CannotLinkSet CannotLinkSet::FromPool(const ConvertedVectorPool& pool) {
  std::map<Index, std::vector<Index>> by_sub;
  for (size_t i = 0; i < pool.origin.size(); ++i) {
    by_sub[pool.origin[i].subsequence].push_back(static_cast<Index>(i));
  }
  CannotLinkSet links;
  for (auto& [sub, members] : by_sub) links.groups.push_back(std::move(members));
  return links;
}

Index CannotLinkSet::max_group_size() const {
  Index m = 0;
  for (const auto& g : groups) m = std::max<Index>(m, static_cast<Index>(g.size()));
  return m;
}

namespace {

Matrix InitCentroids(const Matrix& x, int k, Rng& rng) {
  const Index n = x.cols();
  Matrix centroids(x.rows(), k);
  std::vector<char> chosen(static_cast<size_t>(n), 0);
  Vector min_d2 = Vector::Constant(n, std::numeric_limits<double>::infinity());

  auto take = [&](Index idx, int c) {
    chosen[static_cast<size_t>(idx)] = 1;
    centroids.col(c) = x.col(idx);
    for (Index i = 0; i < n; ++i) {
      min_d2(i) = std::min(min_d2(i), (x.col(i) - x.col(idx)).squaredNorm());
    }
  };

  take(static_cast<Index>(rng.Below(static_cast<std::uint64_t>(n))), 0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (!chosen[static_cast<size_t>(i)]) total += min_d2(i);
    }
    Index pick = -1;
    if (total > 0.0) {
      double r = rng.Uniform() * total;
      for (Index i = 0; i < n; ++i) {
        if (chosen[static_cast<size_t>(i)] || min_d2(i) <= 0.0) continue;
        pick = i;
        r -= min_d2(i);
        if (r < 0.0) break;
      }
    } else {
      // Fewer distinct points than clusters: pick uniformly among the rest.
      std::vector<Index> rest;
      for (Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<size_t>(i)]) rest.push_back(i);
      }
      pick = rest[rng.Below(rest.size())];
    }
    take(pick, c);
  }
  return centroids;
}

}  // namespace

ClusterAssignment ClcKmeans(const Matrix& vectors, int k, const CannotLinkSet& links,
                            const KMeansOptions& options) {
  const Index n = vectors.cols();
  Require(n >= 1, ErrorCode::kInvalidArgument, "clustering needs a nonempty pool");
  Require(k >= 1 && k <= n, ErrorCode::kInvalidArgument,
          "cluster count " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  Require(k >= links.max_group_size(), ErrorCode::kInfeasible,
          "cluster count " + std::to_string(k) + " is below the largest cannot-link group (" +
              std::to_string(links.max_group_size()) + ")");
  Require(options.max_iter >= 1, ErrorCode::kInvalidArgument, "max_iter must be >= 1");

  std::vector<char> covered(static_cast<size_t>(n), 0);
  for (const auto& g : links.groups) {
    for (Index i : g) {
      Require(i >= 0 && i < n && !covered[static_cast<size_t>(i)], ErrorCode::kInvalidArgument,
              "cannot-link groups must partition the pool");
      covered[static_cast<size_t>(i)] = 1;
    }
  }
  Require(std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; }),
          ErrorCode::kInvalidArgument, "cannot-link groups must cover the pool");

  Matrix x(vectors.rows(), n);
  for (Index i = 0; i < n; ++i) {
    const double norm = vectors.col(i).norm();
    Require(norm > 0.0, ErrorCode::kInvalidArgument, "cannot cluster a zero-norm vector");
    x.col(i) = vectors.col(i) / norm;
  }

  Rng rng(options.seed);
  ClusterAssignment out;
  out.centroids = InitCentroids(x, k, rng);
  out.labels.assign(static_cast<size_t>(n), -1);

  auto sq_dist = [&](Index i, int c) { return (x.col(i) - out.centroids.col(c)).squaredNorm(); };

  for (int iter = 0; iter < options.max_iter; ++iter) {
    out.iterations = iter + 1;
    double inertia = 0.0;
    for (const auto& g : links.groups) {
      const Index m = static_cast<Index>(g.size());
      Matrix cost(m, k);
      for (Index r = 0; r < m; ++r) {
        for (int c = 0; c < k; ++c) cost(r, c) = sq_dist(g[static_cast<size_t>(r)], c);
      }
      Assignment best = SolveAssignment(cost);
      // Keep the current labels when they are already optimal, so that ties
      // cannot make the assignment oscillate.
      if (iter > 0) {
        double current = 0.0;
        for (Index r = 0; r < m; ++r) current += cost(r, out.labels[static_cast<size_t>(g[static_cast<size_t>(r)])]);
        if (current <= best.cost) {
          inertia += current;
          continue;
        }
      }
      for (Index r = 0; r < m; ++r) {
        out.labels[static_cast<size_t>(g[static_cast<size_t>(r)])] =
            best.row_to_col[static_cast<size_t>(r)];
      }
      inertia += best.cost;
    }
    out.inertia_trace.push_back(inertia);

    Matrix next = out.centroids;
    std::vector<int> sizes(static_cast<size_t>(k), 0);
    Matrix sums = Matrix::Zero(x.rows(), k);
    for (Index i = 0; i < n; ++i) {
      const int c = out.labels[static_cast<size_t>(i)];
      sums.col(c) += x.col(i);
      ++sizes[static_cast<size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<size_t>(c)] > 0) next.col(c) = sums.col(c) / sizes[static_cast<size_t>(c)];
    }
    const double shift = (next - out.centroids).colwise().norm().maxCoeff();
    out.centroids = std::move(next);
    if (shift < options.tol) break;
  }

  out.inertia = 0.0;
  for (Index i = 0; i < n; ++i) out.inertia += sq_dist(i, out.labels[static_cast<size_t>(i)]);
  out.inertia_trace.push_back(out.inertia);
  return out;
}

DiarizationResult Stitch(const std::vector<PosteriorMatrix>& local, const std::vector<int>& labels,
                         const SubsequencePartition& partition, int k, double activity_threshold,
                         double frame_duration) {
  Require(static_cast<Index>(local.size()) == partition.count(), ErrorCode::kDimensionMismatch,
          "one local posterior matrix per subsequence is required");
  Require(k >= 0, ErrorCode::kInvalidArgument, "speaker count must be >= 0");

  DiarizationResult out;
  out.branch = Branch::kLocal;
  out.speaker_count = k;
  out.posteriors.data = Matrix::Constant(partition.frames(), k, kProbEpsilon);

  size_t column = 0;
  for (Index l = 0; l < partition.count(); ++l) {
    const PosteriorMatrix& p = local[static_cast<size_t>(l)];
    Require(p.frames() == partition.length(l) || p.speakers() == 0, ErrorCode::kDimensionMismatch,
            "local posterior rows differ from subsequence length in subsequence " +
                std::to_string(l));
    std::vector<char> used(static_cast<size_t>(k), 0);
    for (Index s = 0; s < p.speakers(); ++s, ++column) {
      Require(column < labels.size(), ErrorCode::kDimensionMismatch,
              "fewer cluster labels than local speakers");
      const int g = labels[column];
      Require(g >= 0 && g < k, ErrorCode::kInvalidArgument, "cluster label out of range");
      Require(!used[static_cast<size_t>(g)], ErrorCode::kInfeasible,
              "two speakers of subsequence " + std::to_string(l) + " share cluster " +
                  std::to_string(g));
      used[static_cast<size_t>(g)] = 1;
      out.posteriors.data.block(partition.begin(l), g, partition.length(l), 1) = p.data.col(s);
    }
  }
  Require(column == labels.size(), ErrorCode::kDimensionMismatch,
          "more cluster labels than local speakers");
  out.segments = Binarize(out.posteriors, activity_threshold, frame_duration);
  return out;
}

}  // namespace ladiar

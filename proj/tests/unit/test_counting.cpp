#include "ladiar/counting.hpp"

#include "doctest.h"
#include "generators.hpp"

#include <cmath>
#include <functional>

using namespace ladiar;

namespace {

ConvertedVectorPool PoolOf(const Matrix& columns, const std::vector<Index>& subsequence) {
  ConvertedVectorPool pool;
  pool.columns = columns;
  std::map<Index, Index> next;
  for (Index s : subsequence) pool.origin.push_back({s, next[s]++});
  return pool;
}

EigenSpectrum Spectrum(std::vector<double> v) { return {std::move(v)}; }

// Pool whose modified affinity is exactly block-constant: block b holds
// sizes[b] copies of axis b, the j-th copy placed in subsequence j.
ConvertedVectorPool BlockPool(const std::vector<int>& sizes) {
  const Index dim = static_cast<Index>(sizes.size());
  std::vector<Index> subseq;
  Matrix cols(dim, 0);
  for (size_t b = 0; b < sizes.size(); ++b) {
    for (int j = 0; j < sizes[b]; ++j) {
      cols.conservativeResize(dim, cols.cols() + 1);
      cols.col(cols.cols() - 1) = Matrix::Identity(dim, dim).col(static_cast<Index>(b));
      subseq.push_back(j);
    }
  }
  // Origins must be assigned in pool order; group by subsequence afterwards.
  ConvertedVectorPool pool;
  pool.columns = cols;
  std::map<Index, Index> next;
  for (Index s : subseq) pool.origin.push_back({s, next[s]++});
  return pool;
}

}  // namespace

TEST_CASE("cosine similarity values") {
  Vector u(2), v(2), w(2);
  u << 1, 0;
  v << 1, 1;
  w << 0, 3;
  CHECK(CosineSim(u, u) == doctest::Approx(1.0));
  CHECK(CosineSim(u, w) == doctest::Approx(0.0));
  CHECK(CosineSim(u, v) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK_THROWS_AS(CosineSim(u, Vector::Zero(2)), Error);
}

TEST_CASE("modified affinity zeroes pairs from one subsequence") {
  Matrix b(2, 2);
  b << 1, 1, 0, 0.01;  // nearly parallel
  const auto r = BuildModifiedAffinity(PoolOf(b, {0, 0}), 0.5);
  CHECK(r.kind == AffinityKind::kModified);
  CHECK(r.data(0, 1) == 0.0);
  CHECK(r.data(1, 0) == 0.0);
  CHECK(r.data(0, 0) == 1.0);
}

TEST_CASE("modified affinity hinge endpoints and midpoint") {
  const double margin = 0.5;
  auto pair_with_sim = [](double sim) {
    Matrix b(2, 2);
    b << 1, sim, 0, std::sqrt(1.0 - sim * sim);
    return b;
  };
  CHECK(BuildModifiedAffinity(PoolOf(pair_with_sim(0.5), {0, 1}), margin).data(0, 1) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(BuildModifiedAffinity(PoolOf(pair_with_sim(1.0), {0, 1}), margin).data(0, 1) ==
        doctest::Approx(1.0));
  CHECK(BuildModifiedAffinity(PoolOf(pair_with_sim(0.75), {0, 1}), margin).data(0, 1) ==
        doctest::Approx(0.5));
  CHECK(BuildModifiedAffinity(PoolOf(pair_with_sim(-0.9), {0, 1}), margin).data(0, 1) == 0.0);
}

TEST_CASE("raw affinity is the cosine matrix") {
  Matrix b(2, 3);
  b << 1, 1, 0, 0, 1, 2;
  const auto r = BuildRawAffinity(PoolOf(b, {0, 0, 1}));
  CHECK(r.kind == AffinityKind::kRaw);
  CHECK(r.data(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(r.data(0, 2) == doctest::Approx(0.0));
  CHECK(r.data(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("property: modified affinity is symmetric, bounded and respects subsequences") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = gen::IntIn(rng, 1, 15);
    const Matrix b = gen::Gaussian(rng, 5, n);
    std::vector<Index> sub;
    Index current = 0;
    for (Index i = 0; i < n; ++i) {
      if (i > 0 && rng.Uniform() < 0.5) ++current;
      sub.push_back(current);
    }
    const double margin = rng.Uniform(0.0, 0.9);
    const auto pool = PoolOf(b, sub);
    const Matrix r = BuildModifiedAffinity(pool, margin).data;
    for (Index i = 0; i < n; ++i) {
      REQUIRE(r(i, i) == 1.0);
      for (Index j = 0; j < n; ++j) {
        REQUIRE(r(i, j) == r(j, i));
        REQUIRE(r(i, j) >= 0.0);
        REQUIRE(r(i, j) <= 1.0);
        if (i != j && sub[static_cast<size_t>(i)] == sub[static_cast<size_t>(j)]) {
          REQUIRE(r(i, j) == 0.0);
        }
      }
    }
    // Eigenvalues sum to the trace, which is S*.
    const auto spectrum = EigvalsDesc({r, AffinityKind::kModified});
    double sum = 0.0;
    for (double v : spectrum.values) sum += v;
    REQUIRE(std::abs(sum - static_cast<double>(n)) < 1e-9);
    REQUIRE(std::is_sorted(spectrum.values.rbegin(), spectrum.values.rend()));
  }
}

TEST_CASE("eigenvalues of small reference matrices") {
  const auto id = EigvalsDesc({Matrix::Identity(3, 3)});
  for (double v : id.values) CHECK(v == doctest::Approx(1.0));

  Matrix block = Matrix::Zero(3, 3);
  block.topLeftCorner(2, 2).setOnes();
  block(2, 2) = 1.0;
  const auto bs = EigvalsDesc({block});
  REQUIRE(bs.values.size() == 3);
  CHECK(bs.values[0] == doctest::Approx(2.0));
  CHECK(bs.values[1] == doctest::Approx(1.0));
  CHECK(std::abs(bs.values[2]) < 1e-12);

  const auto ones = EigvalsDesc({Matrix::Ones(4, 4)});
  CHECK(ones.values[0] == doctest::Approx(4.0));
  for (size_t i = 1; i < 4; ++i) CHECK(std::abs(ones.values[i]) < 1e-12);
}

TEST_CASE("eigen solve rejects asymmetric input") {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = 0.5;
  CHECK_THROWS_AS(EigvalsDesc({m}), Error);
}

TEST_CASE("eigenratio count") {
  CHECK(CountEigenratio(Spectrum({2, 1, 0})) == 2);
  CHECK(CountEigenratio(Spectrum({4, 0, 0, 0})) == 1);
  CHECK(CountEigenratio(Spectrum({3, 2.9, 0.1, 0.05})) == 2);
  CHECK(CountEigenratio(Spectrum({5})) == 1);
}

TEST_CASE("filtered eigenratio count") {
  CHECK(CountEigenratioFiltered(Spectrum({2, 1, 0})) == 2);
  CHECK(CountEigenratioFiltered(Spectrum({1, 1, 1})) == 3);
  CHECK(CountEigenratioFiltered(Spectrum({4, 0, 0, 0})) == 1);
  // Indefinite spectra: negative values never qualify.
  CHECK(CountEigenratioFiltered(Spectrum({2.5, 1.2, -0.3, -0.4})) == 2);
  // Nothing reaches one.
  CHECK(CountEigenratioFiltered(Spectrum({0.9, 0.5})) == 1);
}

TEST_CASE("property: eigenratio count is scale invariant") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = gen::IntIn(rng, 2, 12);
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(rng.Uniform(0.0, 10.0));
    std::sort(v.rbegin(), v.rend());
    // Powers of two keep every ratio bit-identical.
    const double scale = std::ldexp(1.0, gen::IntIn(rng, -8, 8));
    std::vector<double> w = v;
    for (double& x : w) x *= scale;
    REQUIRE(CountEigenratio(Spectrum(v)) == CountEigenratio(Spectrum(w)));
  }
}

TEST_CASE("count floor") {
  const int a[] = {1, 3, 2};
  CHECK(ApplyCountFloor(2, a) == 3);
  const int b[] = {1, 2};
  CHECK(ApplyCountFloor(5, b) == 5);
  const int c[] = {0, 0};
  CHECK(ApplyCountFloor(0, c) == 0);
  CHECK_THROWS_AS(ApplyCountFloor(1, std::span<const int>()), Error);
}

TEST_CASE("property: count floor is at least every local count") {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> local;
    const int n = gen::IntIn(rng, 1, 10);
    for (int i = 0; i < n; ++i) local.push_back(gen::IntIn(rng, 0, 6));
    const int count = gen::IntIn(rng, 0, 8);
    const int floored = ApplyCountFloor(count, local);
    REQUIRE(floored >= count);
    for (int l : local) REQUIRE(floored >= l);
    REQUIRE((floored == count || std::find(local.begin(), local.end(), floored) != local.end()));
  }
}

TEST_CASE("property: block-constant affinities are counted exactly") {
  // Every partition of up to 24 vectors into 1..8 blocks. Block order does not
  // change the spectrum, so one ordering per multiset suffices here.
  int cases = 0;
  std::vector<int> sizes;
  std::function<void(int, int)> rec = [&](int remaining, int max_part) {
    if (!sizes.empty()) {
      const auto pool = BlockPool(sizes);
      const auto spectrum = EigvalsDesc(BuildModifiedAffinity(pool, 0.5));
      const int blocks = static_cast<int>(sizes.size());
      REQUIRE(CountEigenratioFiltered(spectrum) == blocks);
      std::map<Index, int> per_sub;
      for (const auto& o : pool.origin) ++per_sub[o.subsequence];
      std::vector<int> local;
      for (const auto& [l, c] : per_sub) local.push_back(c);
      REQUIRE(ApplyCountFloor(CountEigenratioFiltered(spectrum), local) == blocks);
      ++cases;
    }
    if (sizes.size() == 8) return;
    for (int p = std::min(remaining, max_part); p >= 1; --p) {
      sizes.push_back(p);
      rec(remaining - p, p);
      sizes.pop_back();
    }
  };
  rec(24, 24);
  CHECK(cases > 1000);
}

TEST_CASE("raw and filtered counts on separated clusters") {
  // Three clusters of five members, one member per subsequence.
  Rng rng(8);
  auto clusters = [&](double jitter) {
    Matrix b(6, 15);
    std::vector<Index> sub;
    for (int c = 0; c < 3; ++c) {
      for (int m = 0; m < 5; ++m) {
        b.col(c * 5 + m) = Matrix::Identity(6, 6).col(c) + jitter * gen::Gaussian(rng, 6, 1);
        sub.push_back(m);
      }
    }
    return PoolOf(b, sub);
  };
  const auto exact = clusters(0.0);
  EigenSpectrum raw = EigvalsDesc(BuildRawAffinity(exact));
  for (double& v : raw.values) v = std::max(v, 0.0);
  CHECK(CountEigenratio(raw) == 3);
  // With jitter the trailing raw eigenvalues are tiny but non-zero and their
  // ratios are unstable; the filtered count still finds three.
  CHECK(CountEigenratioFiltered(EigvalsDesc(BuildModifiedAffinity(clusters(0.01), 0.5))) == 3);
}

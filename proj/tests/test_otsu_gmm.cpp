#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "seedforge/gmm.hpp"
#include "seedforge/otsu.hpp"

using namespace seedforge;

namespace {

std::size_t upper_count(const OtsuThreshold& t, const std::vector<double>& v) {
  std::size_t n = 0;
  for (double x : v) n += t.above(x);
  return n;
}

/// Lloyd's k-means on sorted 1-D samples, then per-cluster moments.
std::vector<GaussianComponent> kmeans_moments(const std::vector<double>& v, std::vector<double> centers) {
  std::vector<std::size_t> assign(v.size());
  for (int it = 0; it < 100; ++it) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < centers.size(); ++k)
        if (std::abs(v[i] - centers[k]) < std::abs(v[i] - centers[best])) best = k;
      assign[i] = best;
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      double s = 0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (assign[i] == k) s += v[i], ++n;
      if (n) centers[k] = s / static_cast<double>(n);
    }
  }
  std::vector<GaussianComponent> out(centers.size());
  for (std::size_t k = 0; k < centers.size(); ++k) {
    double n = 0, ss = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (assign[i] == k) n += 1, ss += (v[i] - centers[k]) * (v[i] - centers[k]);
    out[k] = {n / static_cast<double>(v.size()), centers[k], n > 0 ? ss / n : 0.0};
  }
  return out;
}

}  // namespace

TEST(Otsu, TwoPointHistogram) {
  const std::vector<double> v{0, 0, 0, 1, 1, 1};
  const auto t = otsu_threshold(v);
  EXPECT_EQ(upper_count(t, v), 3u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(t.above(v[i]), v[i] == 1.0);
}

TEST(Otsu, JitteredModesThresholdBetween) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> j(-0.02, 0.02);
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(0.2 + j(rng));
  for (int i = 0; i < 100; ++i) v.push_back(0.8 + j(rng));
  const auto t = otsu_threshold(v);
  EXPECT_GT(t.threshold, 0.3);
  EXPECT_LT(t.threshold, 0.7);
  EXPECT_EQ(t.bin, oracle::otsu_exhaustive(v).bin);
  EXPECT_EQ(upper_count(t, v), 100u);
}

TEST(Otsu, SingleHighSample) {
  const std::vector<double> v{0.1, 0.1, 0.9};
  const auto t = otsu_threshold(v);
  EXPECT_EQ(upper_count(t, v), 1u);
  EXPECT_TRUE(t.above(0.9));
  EXPECT_EQ(t.bin, oracle::otsu_exhaustive(v).bin);
}

TEST(Otsu, IdenticalValuesAreDegenerate) {
  const std::vector<double> v{0.4, 0.4, 0.4};
  try {
    otsu_threshold(v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate);
  }
}

TEST(Otsu, MatchesExhaustiveScanOnRandomSets) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> size(2, 80);
  for (int t = 0; t < 300; ++t) {
    auto v = oracle::random_values(rng, size(rng));
    if (t % 3 == 0)
      for (auto& x : v) x = std::round(x * 5) / 5;
    if (*std::min_element(v.begin(), v.end()) == *std::max_element(v.begin(), v.end())) continue;
    for (std::size_t bins : {2u, 16u, 256u}) {
      const auto got = otsu_threshold(v, bins);
      const auto want = oracle::otsu_exhaustive(v, bins);
      ASSERT_EQ(got.bin, want.bin) << "set " << t << " bins " << bins;
      EXPECT_EQ(upper_count(got, v), want.upper_count);
    }
  }
}

TEST(Otsu, InvariantUnderAffineRescaling) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto v = oracle::random_values(rng, 40);
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = 3.0 * v[i] + 7.0;
    const auto a = otsu_threshold(v), b = otsu_threshold(w);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(a.above(v[i]), b.above(w[i]));
  }
}

TEST(Gmm, TwoDeltaClusters) {
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(0.2 + 1e-3 * (i % 5));
  for (int i = 0; i < 100; ++i) v.push_back(0.8 + 1e-3 * (i % 7));
  const auto m = fit_gmm(v, {2, 200, 1e-6});
  const auto ref = kmeans_moments(v, {0.0, 1.0});
  std::vector<double> means{m.components[0].mean, m.components[1].mean};
  std::sort(means.begin(), means.end());
  EXPECT_NEAR(means[0], 0.2, 0.02);
  EXPECT_NEAR(means[1], 0.8, 0.02);
  EXPECT_NEAR(means[0], ref[0].mean, 1e-6);
  EXPECT_NEAR(means[1], ref[1].mean, 1e-6);
}

TEST(Gmm, ConstantInputCollapsesToFloor) {
  const std::vector<double> v(40, 0.5);
  const auto m = fit_gmm(v, {2, 200, 1e-6});
  EXPECT_EQ(m.components[0].mean, m.components[1].mean);
  for (const auto& c : m.components) EXPECT_EQ(c.variance, kVarianceFloor);
}

TEST(Gmm, TiedQuantilesAreFlagged) {
  // 92% of samples at 0: all three initial quantiles coincide.
  std::vector<double> v(920, 0.0);
  v.insert(v.end(), 80, 1.0);
  const auto m = fit_gmm(v, {3, 200, 1e-6});
  ASSERT_FALSE(m.warnings.empty());
  EXPECT_NE(m.warnings[0].find("coincident means"), std::string::npos);

  std::mt19937_64 rng(8);
  EXPECT_TRUE(fit_gmm(oracle::random_values(rng, 300), {3, 200, 1e-6}).warnings.empty());
}

TEST(Gmm, RecoversMixtureWeights) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> a(0.3, 0.01), b(0.7, 0.01);
  std::bernoulli_distribution pick(0.7);
  std::vector<double> v;
  for (int i = 0; i < 10000; ++i) v.push_back(pick(rng) ? a(rng) : b(rng));
  const auto m = fit_gmm(v, {2, 200, 1e-6});
  auto lo = m.components[0], hi = m.components[1];
  if (lo.mean > hi.mean) std::swap(lo, hi);
  EXPECT_NEAR(lo.weight, 0.7, 0.05);
  EXPECT_NEAR(hi.weight, 0.3, 0.05);
  EXPECT_NEAR(lo.mean, 0.3, 0.005);
  EXPECT_NEAR(hi.mean, 0.7, 0.005);
  EXPECT_TRUE(m.converged);
}

TEST(Gmm, ModelInvariantsAndMonotoneLikelihood) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> K(2, 4);
  for (int t = 0; t < 40; ++t) {
    const std::size_t k = K(rng);
    auto v = oracle::random_values(rng, 60 + 20 * static_cast<std::size_t>(t));
    if (t % 2)
      for (auto& x : v) x = x * x;
    const auto m = fit_gmm(v, {k, 200, 1e-9});
    double wsum = 0;
    for (const auto& c : m.components) {
      EXPECT_GT(c.weight, 0.0);
      EXPECT_GE(c.variance, kVarianceFloor);
      wsum += c.weight;
    }
    EXPECT_NEAR(wsum, 1.0, 1e-9);
    for (std::size_t i = 1; i < m.log_likelihood.size(); ++i) {
      const bool rescued = std::find(m.rescues.begin(), m.rescues.end(), i - 1) != m.rescues.end();
      if (!rescued) { EXPECT_GE(m.log_likelihood[i], m.log_likelihood[i - 1] - 1e-9) << "iteration " << i; }
    }
  }
}

TEST(Gmm, DeterministicInitialization) {
  std::mt19937_64 rng(6);
  const auto v = oracle::random_values(rng, 300);
  const auto a = fit_gmm(v), b = fit_gmm(v);
  ASSERT_EQ(a.components.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.components[k].mean, b.components[k].mean);
    EXPECT_EQ(a.components[k].variance, b.components[k].variance);
  }
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
}

TEST(Gmm, ParameterErrors) {
  const std::vector<double> v(25, 0.1);
  EXPECT_THROW(fit_gmm(v, {1, 10, 1e-6}), Error);
  EXPECT_THROW(fit_gmm(v, {3, 10, 1e-6}), Error);  // fewer than 10*K samples
  EXPECT_THROW(fit_gmm(v, {2, 10, 0.0}), Error);
}

TEST(Gmm, IterationCapReportsNonConvergence) {
  std::mt19937_64 rng(7);
  const auto v = oracle::random_values(rng, 500);
  const auto m = fit_gmm(v, {3, 2, 1e-15});
  EXPECT_FALSE(m.converged);
  EXPECT_FALSE(m.warnings.empty());
}

#include <gtest/gtest.h>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lpball/distributions.hpp"
#include "lpball/statistics.hpp"

using namespace lpball;

namespace {

double lp_norm_of(const std::vector<double>& v, double p) {
  return std::pow(detail::pow_sum(v, p), 1.0 / p);
}

// KS p-value of a sample against a CDF; the sample is sorted in place.
double ks_pvalue(std::vector<double>& xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  return kolmogorov_pvalue(ks_statistic(xs, cdf), static_cast<double>(xs.size()));
}

}  // namespace

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Xoshiro256pp a = stream_rng(7, 3, 1), b = stream_rng(7, 3, 1);
  EXPECT_EQ(a, b);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
  Xoshiro256pp c = stream_rng(7, 3, 2), d = stream_rng(7, 4, 1), e = stream_rng(8, 3, 1);
  const auto x = stream_rng(7, 3, 1)();
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
  EXPECT_NE(x, e());
}

TEST(Rng, UniformStaysInsideOpenInterval) {
  EXPECT_GT(uniform_open01(std::uint64_t{0}), 0.0);
  EXPECT_LT(uniform_open01(~std::uint64_t{0}), 1.0);
}

TEST(Variates, NormalPassesKs) {
  Xoshiro256pp g(11);
  std::vector<double> xs(200000);
  for (auto& x : xs) x = standard_normal(g);
  EXPECT_GT(ks_pvalue(xs, [](double x) { return normal_cdf(x); }), 1e-3);
}

TEST(Variates, NormalTailBeyondZigguratBase) {
  // P[|N| > 3.6541528853610088] is about 2.6e-4; the tail branch must be exercised and correct.
  Xoshiro256pp g(12);
  const int n = 4000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += std::abs(standard_normal(g)) > 3.6541528853610088;
  const double pexp = 2.0 * (1.0 - normal_cdf(3.6541528853610088));
  const double se = std::sqrt(pexp * (1 - pexp) / n);
  EXPECT_NEAR(hits / static_cast<double>(n), pexp, 5.0 * se);
}

TEST(Variates, GammaPassesKs) {
  for (double shape : {0.2, 0.5, 1.0, 1.7, 6.0}) {
    Xoshiro256pp g(static_cast<std::uint64_t>(shape * 1000));
    std::vector<double> xs(100000);
    for (auto& x : xs) x = gamma_variate(g, shape);
    boost::math::gamma_distribution<double> law(shape, 1.0);
    EXPECT_GT(ks_pvalue(xs, [&](double x) { return boost::math::cdf(law, x); }), 1e-3) << shape;
  }
}

TEST(Variates, LogGammaSurvivesTinyShape) {
  Xoshiro256pp g(5);
  for (int i = 0; i < 1000; ++i) {
    const double lg = log_gamma_variate(g, 1e-3);
    ASSERT_TRUE(std::isfinite(lg));
  }
  EXPECT_THROW(gamma_variate(g, 0.0), DomainError);
}

TEST(Variates, BetaPassesKs) {
  Xoshiro256pp g(21);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = beta_variate(g, 1.5, 4.0);
  boost::math::beta_distribution<double> law(1.5, 4.0);
  EXPECT_GT(ks_pvalue(xs, [&](double x) { return boost::math::cdf(law, x); }), 1e-3);
}

TEST(Mixing, LawSummaries) {
  EXPECT_EQ(law_mass_at_zero(Dirac0{}), 1.0);
  EXPECT_EQ(law_mass_at_zero(ExponentialLaw{2.0}), 0.0);
  EXPECT_DOUBLE_EQ(*law_mean(GammaLaw{3.0, 2.0}), 1.5);
  EXPECT_DOUBLE_EQ(*law_variance(GammaLaw{3.0, 2.0}), 0.75);
  EXPECT_FALSE(law_mean(ExternalLaw{[](Xoshiro256pp&) { return 1.0; }, {}, 0.0, "x"}).has_value());
  EXPECT_THROW(validate_law(ExponentialLaw{0.0}), DomainError);
  EXPECT_THROW(validate_law(GammaLaw{-1.0, 1.0}), DomainError);
  EXPECT_THROW(validate_law(ExternalLaw{}), DomainError);
}

TEST(Mixing, ExternalSamplerMustBeNonnegative) {
  Xoshiro256pp g(1);
  ExternalLaw bad{[](Xoshiro256pp&) { return -0.5; }, {}, 0.0, "bad"};
  EXPECT_THROW(sample_mixing(bad, g), ConsistencyError);
  ExternalLaw ok{[](Xoshiro256pp& r) { return 2.0 * uniform_open01(r); }, {}, 0.0, "unif"};
  EXPECT_GE(sample_mixing(ok, g), 0.0);
}

TEST(GeneralizedGaussian, AbsoluteMomentsMatchMp) {
  // E|Y|^p = 1 and E|Y|^q = M_p(q), checked at 5 standard errors.
  for (double p : {0.7, 1.0, 2.0, 3.0}) {
    Xoshiro256pp g(static_cast<std::uint64_t>(p * 77));
    const double q = 1.5;
    MomentSummary sp, sq;
    for (int i = 0; i < 200000; ++i) {
      const GGVector y = sample_pgg(p, 1, g);
      sp.push(std::pow(std::abs(y.coords[0]), p));
      sq.push(std::pow(std::abs(y.coords[0]), q));
    }
    EXPECT_NEAR(sp.mean, 1.0, 5.0 * sp.stderr_mean()) << p;
    EXPECT_NEAR(sq.mean, m_p(p, q), 5.0 * sq.stderr_mean()) << p;
  }
}

TEST(GeneralizedGaussian, SignIsSymmetric) {
  Xoshiro256pp g(3);
  const GGVector y = sample_pgg(1.5, 100000, g);
  const auto pos = std::count_if(y.coords.begin(), y.coords.end(), [](double v) { return v > 0; });
  EXPECT_NEAR(pos / 1e5, 0.5, 5.0 * 0.5 / std::sqrt(1e5));
}

TEST(Ball, SpherePointsHaveUnitNorm) {
  for (double p : {0.5, 1.0, 1.5, 2.0, 3.0, 7.0})
    for (std::uint64_t n : {1u, 2u, 17u, 1000u}) {
      Xoshiro256pp g(n * 31 + static_cast<std::uint64_t>(p * 10));
      for (int i = 0; i < 50; ++i) {
        const BallPoint z = sample_ball({p, 1.0, n}, Dirac0{}, g);
        ASSERT_LT(std::abs(lp_norm_of(z.coords, p) - 1.0), 1e-12) << p << " " << n;
      }
    }
}

TEST(Ball, PointsStayInsideTheBall) {
  Xoshiro256pp g(4);
  for (double p : {0.5, 1.0, 2.5})
    for (int i = 0; i < 500; ++i) {
      const BallPoint z = sample_ball({p, 1.0, 5}, ExponentialLaw{0.3}, g);
      ASSERT_LE(lp_norm_of(z.coords, p), 1.0 + 1e-12);
    }
}

TEST(Ball, UniformL1DiscRadialLaw) {
  // p = 1, n = 2, W ~ Exponential(1): uniform on the cross-polytope, P[||Z||_1 <= r] = r^2.
  Xoshiro256pp g(2024);
  std::vector<double> r(100000);
  for (auto& v : r) v = lp_norm_of(sample_ball({1.0, 1.0, 2}, ExponentialLaw{1.0}, g).coords, 1.0);
  std::sort(r.begin(), r.end());
  const double d = ks_statistic(r, [](double x) { return x * x; });
  EXPECT_LT(d, 0.01);
}

TEST(Ball, GammaMixingGivesBetaRadius) {
  // ||Y||_p^p = p G_{n/p} and W ~ Gamma(a, rate 1/p) = p G_a, so ||Z||_p^p ~ Beta(n/p, a).
  const double p = 3.0, a = 2.5;
  const std::uint64_t n = 5;
  Xoshiro256pp g(99);
  std::vector<double> r(60000);
  for (auto& v : r) v = detail::pow_sum(sample_ball({p, 1.0, n}, GammaLaw{a, 1.0 / p}, g).coords, p);
  boost::math::beta_distribution<double> law(n / p, a);
  EXPECT_GT(ks_pvalue(r, [&](double x) { return boost::math::cdf(law, x); }), 1e-3);
}

TEST(Ball, InvalidParamsRejected) {
  Xoshiro256pp g(1);
  EXPECT_THROW(sample_ball({0.0, 1.0, 3}, Dirac0{}, g), DomainError);
  EXPECT_THROW(sample_ball({2.0, 1.0, 0}, Dirac0{}, g), DomainError);
  EXPECT_THROW(sample_pgg(-1.0, 3, g), DomainError);
}

TEST(PowerSums, MeansAndHead) {
  for (double p : {1.0, 2.0, 3.0})
    for (double q : {0.5, 1.0, 2.0, 4.0}) {
      Xoshiro256pp g(static_cast<std::uint64_t>(p * 100 + q * 10));
      const std::uint64_t n = 100000;
      const PowerSums s = sample_power_sums(p, q, n, n / 3, g);
      const double nn = static_cast<double>(n);
      const double sd_q = std::sqrt(m_p(p, 2 * q) - m_p(p, q) * m_p(p, q));
      const double sd_p = std::sqrt(m_p(p, 2 * p) - 1.0);
      EXPECT_NEAR(s.sum_p / nn, 1.0, 6.0 * sd_p / std::sqrt(nn)) << p << " " << q;
      EXPECT_NEAR(s.sum_q / nn, m_p(p, q), 6.0 * sd_q / std::sqrt(nn)) << p << " " << q;
      EXPECT_LE(s.head_q, s.sum_q);
      EXPECT_GT(s.head_q, 0.0);
    }
}

TEST(PowerSums, DeterministicInGeneratorState) {
  Xoshiro256pp a = stream_rng(1, 2, 3), b = stream_rng(1, 2, 3);
  const PowerSums x = sample_power_sums(1.5, 0.7, 10007, 500, a);
  const PowerSums y = sample_power_sums(1.5, 0.7, 10007, 500, b);
  EXPECT_EQ(x.sum_p, y.sum_p);
  EXPECT_EQ(x.sum_q, y.sum_q);
  EXPECT_EQ(x.head_q, y.head_q);
  EXPECT_EQ(a, b);
}

TEST(PowerSums, HeadEqualsFullWhenHeadIsN) {
  Xoshiro256pp g(8);
  const PowerSums s = sample_power_sums(2.0, 1.0, 1000, 1000, g);
  EXPECT_EQ(s.head_q, s.sum_q);
}

TEST(DensityH, ExponentialRateOneOverPIsUniform) {
  for (double p : {0.5, 1.0, 2.0, 3.0})
    for (double r : {0.0, 0.3, 0.9}) EXPECT_EQ(density_h(r, {p, 1.0, 4}, ExponentialLaw{1.0 / p}), 1.0);
}

TEST(DensityH, DiracHasNoDensity) { EXPECT_EQ(density_h(0.5, {2.0, 1.0, 3}, Dirac0{}), 0.0); }

TEST(DensityH, IntegratesToOneAgainstUniformRadius) {
  // Under the uniform law on the ball the radius has density n r^{n-1}; h integrates to 1 against it.
  const BallParams bp{1.5, 1.0, 3};
  for (const MixingLaw& law : std::vector<MixingLaw>{ExponentialLaw{1.0}, GammaLaw{2.0, 0.5}}) {
    auto f = [&](double r) { return density_h(r, bp, law) * 3.0 * r * r; };
    const auto res = integrate(f, 0.0, 1.0 - 1e-12, {1e-12, 1e-10, 4000});
    EXPECT_NEAR(res.value, 1.0, 1e-7) << law_name(law);
  }
}

TEST(DensityH, ExternalDensityMatchesClosedForm) {
  const BallParams bp{2.0, 1.0, 4};
  const double rate = 0.8;
  ExternalLaw ext{[rate](Xoshiro256pp& g) { return standard_exponential(g) / rate; },
                  [rate](double s) { return rate * std::exp(-rate * s); }, 0.0, "exp-ext"};
  for (double r : {0.1, 0.5, 0.8})
    EXPECT_NEAR(density_h(r, bp, ext), density_h(r, bp, ExponentialLaw{rate}),
                1e-8 * density_h(r, bp, ExponentialLaw{rate}));
  ExternalLaw no_density{ext.sampler, {}, 0.0, "sampler-only"};
  EXPECT_THROW(density_h(0.5, bp, no_density), DomainError);
  EXPECT_THROW(density_h(1.0, bp, ExponentialLaw{1.0}), DomainError);
}

TEST(Projection, CoordinatesKeepPrefix) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_EQ(project_coordinates(x, 2), (std::vector<double>{1, 2}));
  EXPECT_THROW(project_coordinates(x, 0), DomainError);
  EXPECT_THROW(project_coordinates(x, 5), DomainError);
}

TEST(Projection, HaarGramSchmidtAndBetaIdentityAgree) {
  const std::uint64_t n = 12, k = 4;
  Xoshiro256pp g(77);
  std::vector<double> x(n);
  for (auto& c : x) c = standard_normal(g);
  const double nx = std::sqrt(detail::pow_sum(x, 2.0));
  std::vector<double> a(6000), b(6000);
  for (auto& v : a) v = std::pow(project_haar(x, k, g) / nx, 2);
  for (auto& v : b) v = std::pow(haar_projection_norm(nx, n, k, g) / nx, 2);
  boost::math::beta_distribution<double> law(k / 2.0, (n - k) / 2.0);
  auto cdf = [&](double t) { return boost::math::cdf(law, t); };
  EXPECT_GT(ks_pvalue(a, cdf), 1e-3);
  EXPECT_GT(ks_pvalue(b, cdf), 1e-3);
  const double d = ks_two_sample(a, b);
  EXPECT_GT(kolmogorov_pvalue(d, 3000.0), 1e-3);
}

TEST(Projection, FullDimensionKeepsNorm) {
  Xoshiro256pp g(1);
  const std::vector<double> x = {3.0, 4.0};
  EXPECT_DOUBLE_EQ(project_haar(x, 2, g), 5.0);
  EXPECT_DOUBLE_EQ(haar_projection_norm(5.0, 2, 2, g), 5.0);
  EXPECT_LE(project_haar(x, 1, g), 5.0 + 1e-12);
}

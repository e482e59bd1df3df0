#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "lpball/optim.hpp"
#include "lpball/ratefun.hpp"

using namespace lpball;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lambda by an independent double-exponential quadrature in x.
double lambda_oracle(double t1, double t2, double p, double q) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double x) {
    const double e = std::exp(t1 * std::pow(x, q) + (t2 - 1.0 / p) * std::pow(x, p));
    return std::isfinite(e) ? e : 0.0;
  };
  const double norm = std::pow(p, 1.0 / p) * std::tgamma(1.0 + 1.0 / p);
  return std::log(integrator.integrate(f, 1e-14) / norm);
}

double lambda_tilde_oracle(double t, double p) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double x) {
    const double e = std::exp((t - 1.0 / p) * std::pow(x, p));
    return std::isfinite(e) ? e : 0.0;
  };
  return std::log(integrator.integrate(f, 1e-14) / (std::pow(p, 1.0 / p) * std::tgamma(1.0 + 1.0 / p)));
}

UserGridRate cheap_mixing_rate() {
  // Slope 0.05 against 1/p for the exponential mixing.
  UserGridRate r;
  for (int i = 0; i <= 40; ++i) {
    r.grid.x.push_back(i * 0.25);
    r.grid.rate.emplace_back(0.05 * i * 0.25);
  }
  return r;
}

// Minimum of the bivariate rate over the line x/(q M) - y/p = t, parametrized by y.
double contraction_oracle(double t, double p, double q) {
  const double qm = q * m_p(p, q);
  auto f = [&](double y) { return mdp_rate_bivariate(qm * (t + y / p), y, p, q).value(); };
  const double scale = 10.0 * (1.0 + std::abs(t)) * p;
  return minimize_brent(f, -scale, scale, 1e-12, 500).value;
}

}  // namespace

TEST(MixingRate, Evaluation) {
  EXPECT_EQ(mixing_rate_eval(DiracRate{}, 0.0), ExtReal(0.0));
  EXPECT_TRUE(mixing_rate_eval(DiracRate{}, 0.5).is_infinite());
  EXPECT_DOUBLE_EQ(mixing_rate_eval(ExponentialRate{2.0}, 3.0).value(), 1.5);
  EXPECT_TRUE(mixing_rate_eval(ExponentialRate{2.0}, -1.0).is_infinite());
  RateGrid g;
  for (int i = 0; i <= 4; ++i) {
    g.x.push_back(i / 4.0);
    g.rate.emplace_back(i * i / 16.0);
  }
  const UserGridRate ug{g};
  EXPECT_DOUBLE_EQ(mixing_rate_eval(ug, 0.5).value(), 0.25);
  EXPECT_DOUBLE_EQ(mixing_rate_eval(ug, 0.625).value(), 0.5 * (0.25 + 0.5625));
  EXPECT_TRUE(mixing_rate_eval(ug, 1.5).is_infinite());
  EXPECT_TRUE(mixing_rate_eval(ug, -0.1).is_infinite());
}

TEST(Mdp, RateAndRefusals) {
  EXPECT_NEAR(mdp_rate(1.0, 2.0, 1.0).value(), 1.0 / (2.0 * clt_variance(2.0, 1.0)), 1e-15);
  EXPECT_EQ(mdp_rate(0.0, 3.0, 1.0), ExtReal(0.0));
  EXPECT_THROW(mdp_rate(1.0, 2.0, 2.0), DegenerateError);
  EXPECT_THROW(mdp_rate(1.0, 1.0, 2.0), DomainError);
}

TEST(Mdp, BivariateBasics) {
  EXPECT_EQ(mdp_rate_bivariate(0.0, 0.0, 2.0, 1.0), ExtReal(0.0));
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const double x = u(g), y = u(g);
    EXPECT_NEAR(mdp_rate_bivariate(x, y, 3.0, 1.5).value(), mdp_rate_bivariate(-x, -y, 3.0, 1.5).value(), 1e-13);
    EXPECT_GE(mdp_rate_bivariate(x, y, 3.0, 1.5).value(), 0.0);
  }
}

TEST(Mdp, ContractionIdentity) {
  for (auto [p, q] : {std::pair{2.0, 1.0}, {3.0, 1.0}, {3.0, 2.0}})
    for (double t : {0.5, 1.0, 2.0}) {
      const double target = mdp_rate(t, p, q).value();
      EXPECT_NEAR(contraction_oracle(t, p, q), target, 1e-8) << p << " " << q << " " << t;
      const ContractionSolution s = mdp_rate_contraction(t, p, q);
      EXPECT_NEAR(s.value, target, 1e-8);
      EXPECT_NEAR(s.x / (q * m_p(p, q)) - s.y / p, t, 1e-12);
    }
}

TEST(Mdp, PrintedBivariateFormAgreesOnlyAtQEqualOne) {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 20; ++i) {
    const double x = u(g), y = u(g);
    EXPECT_TRUE(compare_bivariate_forms(x, y, 2.0, 1.0).agree);
    EXPECT_TRUE(compare_bivariate_forms(x, y, 5.0, 1.0).agree);
  }
  // At q != 1 the cross term differs; the quadratic form stays authoritative.
  EXPECT_FALSE(compare_bivariate_forms(1.0, 1.0, 3.0, 2.0).agree);
  EXPECT_TRUE(compare_bivariate_forms(1.0, 0.0, 3.0, 2.0).agree);
}

TEST(LdpQgtp, ClosedForm) {
  const double p = 1.0, q = 2.0;
  const double x0 = std::sqrt(m_p(p, q));
  EXPECT_EQ(ldp_rate_qgtp(x0, p, q), ExtReal(0.0));
  EXPECT_TRUE(ldp_rate_qgtp(0.99 * x0, p, q).is_infinite());
  double prev = 0.0;
  for (double x = x0 * 1.001; x < 3.0 * x0; x *= 1.01) {
    const double v = ldp_rate_qgtp(x, p, q).value();
    EXPECT_GT(v, prev);
    prev = v;
  }
  // Continuous at the left endpoint, though only Hoelder-(p/q) there.
  EXPECT_LT(ldp_rate_qgtp(x0 * (1 + 1e-12), p, q).value(), 1e-5);
  EXPECT_THROW(ldp_rate_qgtp(1.0, 2.0, 1.0), DomainError);
}

TEST(LdpQgtp, WidthSpeedDisplay) {
  // p = 2 against q* = q/(q-1): (1/2)(x^{q*} - M_2(q*))^{2 - 2/q}.
  for (double q : {1.25, 1.5}) {
    const double qs = holder_conjugate(q);
    for (double x : {1.2, 1.5, 2.0}) {
      const double xx = x * std::pow(m_p(2.0, qs), 1.0 / qs);
      const double display = 0.5 * std::pow(std::pow(xx, q / (q - 1.0)) - m_p(2.0, qs), 2.0 - 2.0 / q);
      EXPECT_NEAR(ldp_rate_qgtp(xx, 2.0, qs).value(), display, 1e-12 * (1 + display));
    }
  }
}

TEST(Lambda, OriginGradientHessian) {
  for (auto [p, q] : {std::pair{2.0, 1.0}, {3.0, 1.5}, {1.5, 0.5}, {7.0, 2.0}}) {
    const LambdaValue L = log_mgf_lambda_eval(0.0, 0.0, p, q);
    EXPECT_NEAR(L.value.value(), 0.0, 1e-10);
    EXPECT_NEAR(L.grad[0], m_p(p, q), 1e-10 * m_p(p, q));
    EXPECT_NEAR(L.grad[1], 1.0, 1e-10);
    const CovMatrix2 c = covariance_matrix(p, q);
    EXPECT_NEAR(L.hess[0], c.c11, 1e-8 * (1 + c.c11));
    EXPECT_NEAR(L.hess[1], c.c12, 1e-8 * (1 + c.c12));
    EXPECT_NEAR(L.hess[2], c.c22, 1e-8 * (1 + c.c22));
  }
}

TEST(Lambda, MatchesIndependentQuadrature) {
  for (auto [p, q] : {std::pair{2.0, 1.0}, {3.0, 1.5}, {1.5, 0.5}})
    for (double t1 : {-3.0, -0.5, 0.4, 2.0})
      for (double t2 : {-2.0, 0.0, 0.25 / p}) {
        const double ours = log_mgf_lambda(t1, t2, p, q).value();
        EXPECT_NEAR(ours, lambda_oracle(t1, t2, p, q), 1e-9 * (1 + std::abs(ours)))
            << p << " " << q << " " << t1 << " " << t2;
      }
  // Tiny positive t1 with p > 2: the mode sits almost at 0 and curvature vanishes there.
  for (double t1 : {1e-12, 1e-7, 1e-3})
    EXPECT_NEAR(log_mgf_lambda(t1, -1.0, 3.0, 2.0).value(), lambda_oracle(t1, -1.0, 3.0, 2.0), 1e-9);
}

TEST(Lambda, InfiniteOutsideDomain) {
  EXPECT_TRUE(log_mgf_lambda(0.3, 0.5, 2.0, 1.0).is_infinite());
  EXPECT_TRUE(log_mgf_lambda(-1.0, 0.7, 2.0, 1.0).is_infinite());
  EXPECT_THROW(log_mgf_lambda(0.0, 0.0, 1.0, 2.0), DomainError);
}

TEST(Lambda, Convexity) {
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> a(-3, 3), b(-3, 0.45);
  for (int i = 0; i < 40; ++i) {
    const double s1 = a(g), s2 = b(g), r1 = a(g), r2 = b(g);
    const double fs = log_mgf_lambda(s1, s2, 2.0, 1.0).value();
    const double fr = log_mgf_lambda(r1, r2, 2.0, 1.0).value();
    for (double th : {0.25, 0.5, 0.75}) {
      const double fm = log_mgf_lambda(th * s1 + (1 - th) * r1, th * s2 + (1 - th) * r2, 2.0, 1.0).value();
      EXPECT_LE(fm, th * fs + (1 - th) * fr + 1e-9);
    }
  }
}

TEST(LambdaTilde, ClosedFormAndQuadrature) {
  for (double p : {0.5, 1.0, 2.0, 3.0}) {
    EXPECT_EQ(log_mgf_lambda_tilde(0.0, p), ExtReal(0.0));
    EXPECT_NEAR(log_mgf_lambda_tilde(0.5 / p, p).value(), std::log(2.0) / p, 1e-15);
    EXPECT_TRUE(log_mgf_lambda_tilde(1.0 / p, p).is_infinite());
    EXPECT_GT(log_mgf_lambda_tilde((1.0 - 1e-12) / p, p).value(), 5.0 / p);
    for (double t : {-1.0, 0.1 / p, 0.8 / p})
      EXPECT_NEAR(log_mgf_lambda_tilde(t, p).value(), lambda_tilde_oracle(t, p), 1e-10);
    EXPECT_EQ(lambda_tilde_conjugate(1.0, p), ExtReal(0.0));
    EXPECT_TRUE(lambda_tilde_conjugate(0.0, p).is_infinite());
  }
}

TEST(Conjugate, ZeroAtMean) {
  const double M = m_p(2.0, 1.0);
  const ConjugatePoint c = legendre_fenchel(M, 1.0, 2.0, 1.0);
  EXPECT_EQ(c.status, ConjugateStatus::Converged);
  EXPECT_NEAR(c.value.value(), 0.0, 1e-12);
  EXPECT_NEAR(c.argmax[0], 0.0, 1e-6);
  EXPECT_NEAR(c.argmax[1], 0.0, 1e-6);
}

TEST(Conjugate, FenchelYoungEquality) {
  for (auto [p, q] : {std::pair{2.0, 1.0}, {3.0, 2.0}})
    for (double t1 : {-1.0, -0.5, 0.0, 0.5, 1.0})
      for (double t2 : {-1.0, -0.5, 0.0, 0.2, 0.4}) {
        if (!(t2 < 1.0 / p)) continue;
        const LambdaValue L = log_mgf_lambda_eval(t1, t2, p, q);
        const double fy = t1 * L.grad[0] + t2 * L.grad[1] - L.value.value();
        const ConjugatePoint c = legendre_fenchel(L.grad[0], L.grad[1], p, q);
        ASSERT_EQ(c.status, ConjugateStatus::Converged) << t1 << " " << t2;
        EXPECT_NEAR(c.value.value(), fy, 1e-6) << t1 << " " << t2;
      }
}

TEST(Conjugate, FenchelInequalityOnProbes) {
  std::mt19937_64 g(23);
  std::uniform_real_distribution<double> s1d(0.2, 2.0), s2d(0.3, 4.0), t1d(-2, 2), t2d(-2, 0.45);
  for (int i = 0; i < 15; ++i) {
    const double s1 = s1d(g), s2 = std::max(s2d(g), s1 * s1 * 1.05);
    const ConjugatePoint c = legendre_fenchel(s1, s2, 2.0, 1.0);
    ASSERT_NE(c.status, ConjugateStatus::NotConverged);
    EXPECT_GE(c.value.value(), 0.0);
    for (int j = 0; j < 10; ++j) {
      const double t1 = t1d(g), t2 = t2d(g);
      EXPECT_GE(c.value.value(), t1 * s1 + t2 * s2 - log_mgf_lambda(t1, t2, 2.0, 1.0).value() - 1e-9);
    }
  }
}

TEST(Conjugate, UnboundedOutsideRange) {
  // s2 <= s1^{p/q} is outside the closure of the gradient range (Jensen).
  EXPECT_EQ(legendre_fenchel(1.0, 0.9, 2.0, 1.0).status, ConjugateStatus::Unbounded);
  EXPECT_TRUE(legendre_fenchel(-0.1, 1.0, 2.0, 1.0).value.is_infinite());
  EXPECT_TRUE(legendre_fenchel(0.5, -1.0, 2.0, 1.0).value.is_infinite());
}

TEST(Conjugate, BoundarySupremum) {
  // Large s2 at fixed s1 pushes the maximizer onto t2 = 1/p.
  const ConjugatePoint c = legendre_fenchel(0.5, 5.0, 2.0, 1.0);
  EXPECT_EQ(c.status, ConjugateStatus::Boundary);
  EXPECT_NEAR(c.argmax[1], 0.5, 1e-6);
  EXPECT_TRUE(c.value.is_finite());
}

TEST(LdpQltp, ZeroAtLlnPoint) {
  for (auto [p, q] : {std::pair{2.0, 1.0}, {3.0, 2.0}}) {
    const double x0 = std::pow(m_p(p, q), 1.0 / q);
    EXPECT_LT(ldp_rate_qltp(x0, p, q, DiracRate{}).value(), 1e-8);
    EXPECT_LT(ldp_rate_qltp(x0, p, q, ExponentialRate{p}).value(), 1e-8);
  }
}

TEST(LdpQltp, MonotoneBeyondLlnPointDirac) {
  const double x0 = std::pow(m_p(2.0, 1.0), 1.0);
  double prev = -1.0;
  for (double x = x0; x < 0.999; x += 0.03) {
    const double v = ldp_rate_qltp(x, 2.0, 1.0, DiracRate{}).value();
    EXPECT_GE(v, prev - 1e-9) << x;
    prev = v;
  }
  EXPECT_TRUE(ldp_rate_qltp(1.0, 2.0, 1.0, DiracRate{}).is_infinite());
}

TEST(LdpQltp, AgreesWithBruteForceGrid) {
  const double p = 2.0, q = 1.0, x = 0.6;
  const double xp = std::pow(x, p), xq = std::pow(x, q), slack = (1 - xp) / xp;
  auto obj = [&](double u, double th, const MixingRate& iw) {
    const double t2 = std::exp(u), t3 = th * t2 * slack;
    const ExtReal c = legendre_fenchel(xq * std::pow(t2 + t3, q / p), t2, p, q).value;
    return (c + mixing_rate_eval(iw, t3)).to_double();
  };
  for (const MixingRate& iw : std::vector<MixingRate>{ExponentialRate{p}, cheap_mixing_rate()}) {
    double grid_min = kInf;
    for (double u = -1.5; u <= 1.5; u += 0.1)
      for (double th = 0.0; th < 1.0; th += 0.05) grid_min = std::min(grid_min, obj(u, th, iw));
    const double v = ldp_rate_qltp(x, p, q, iw).value();
    EXPECT_LE(v, grid_min + 1e-9);
    EXPECT_GE(v, grid_min - 0.05 * grid_min);  // the grid is coarse but not that coarse
  }
}

TEST(LdpQltp, CheaperMixingLowersLowerTail) {
  const UserGridRate cheap = cheap_mixing_rate();
  const double x = 0.5;
  const double dirac = ldp_rate_qltp(x, 2.0, 1.0, DiracRate{}).value();
  const double expo = ldp_rate_qltp(x, 2.0, 1.0, ExponentialRate{2.0}).value();
  const double ch = ldp_rate_qltp(x, 2.0, 1.0, cheap).value();
  EXPECT_LE(expo, dirac + 1e-9);
  EXPECT_LT(ch, expo - 1e-3);
}

TEST(LdpQltp, ExponentialMatchesDiracForPEqualTwo) {
  // With I_W(t) = t/p the marginal cost of t3 at theta = 0 is 1/p - tau2 > 0,
  // so the optimum keeps t3 = 0 and the two mixings share a rate.
  for (double x : {0.4, 0.7, 0.9})
    EXPECT_NEAR(ldp_rate_qltp(x, 2.0, 1.0, DiracRate{}).value(),
                ldp_rate_qltp(x, 2.0, 1.0, ExponentialRate{2.0}).value(), 1e-8);
}

TEST(LdpPeqQ, Examples) {
  for (double p : {1.0, 2.0, 3.0}) {
    EXPECT_NEAR(ldp_rate_p_eq_q(1.0, p, DiracRate{}).value(), 0.0, 1e-12);
    EXPECT_TRUE(ldp_rate_p_eq_q(0.9, p, DiracRate{}).is_infinite());
    EXPECT_TRUE(ldp_rate_p_eq_q(1.1, p, DiracRate{}).is_infinite());
    EXPECT_TRUE(ldp_rate_p_eq_q(0.0, p, DiracRate{}).is_infinite());
    const double x = std::pow(2.0, -1.0 / p);
    const auto oracle = minimize_brent(
        [&](double t) { return lambda_tilde_conjugate(t, p).value() + t / p; }, 1e-6, 10.0, 1e-12);
    EXPECT_NEAR(ldp_rate_p_eq_q(x, p, ExponentialRate{p}).value(), oracle.value, 1e-9);
    // Closed form of the same 1-D problem: minimum at t1 = x^p, value -log x.
    EXPECT_NEAR(oracle.value, -std::log(x), 1e-9);
  }
}

#include "selfnorm/mixture.hpp"

#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

using namespace selfnorm;
using ::testing::DoubleNear;

namespace {

constexpr double kPi = 3.14159265358979323846;

template <typename F>
double simpson(F f, double a, double b, int n)
{
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i)
    s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

MixtureMeasure point_mass(double lambda, double w)
{
  return MixtureMeasure(PointMasses{{{lambda, w}}});
}

} // namespace

TEST(PointMass, LogValueAndBoundaryClosedForm)
{
  const auto f = point_mass(0.5, 2.0);
  EXPECT_THAT(log_mixture_value(3, 4, f), DoubleNear(std::log(2.0) + 1.5 - 0.5, 1e-14));
  for (double v : {1e-2, 1.0, 1e2, 1e6}) {
    for (double c : {1.5, 10.0, 1e3}) {
      // 0.5 u - v / 8 = log(c / 2)
      const double expected = (std::log(c / 2) + v / 8) / 0.5;
      EXPECT_THAT(mixture_boundary(v, c, f), DoubleNear(expected, 1e-8 * std::max(1.0, expected)))
          << "v=" << v << " c=" << c;
    }
  }
}

TEST(PointMass, GeneralOrder)
{
  const auto f = point_mass(0.4, 1.0);
  const double r = 1.5;
  EXPECT_THAT(log_mixture_value(2, 3, f, r), DoubleNear(0.8 - std::pow(0.4, r) * 3 / r, 1e-14));
  const double v = 3.2e7, c = 10;
  const double expected = (std::log(c) + std::pow(0.4, r) * v / r) / 0.4;
  EXPECT_THAT(mixture_boundary(v, c, f, r), DoubleNear(expected, 1e-12 * expected));
}

TEST(IteratedLogDensity, TotalMass)
{
  EXPECT_THAT(MixtureMeasure(IteratedLogDensity{1.0}).total_mass(), DoubleNear(1 / std::log(2.0), 1e-14));
  EXPECT_THAT(MixtureMeasure(IteratedLogDensity{0.5}).total_mass(), DoubleNear(2 / std::sqrt(std::log(2.0)), 1e-14));
}

TEST(IteratedLogDensity, MatchesFrozenQuadrature)
{
  // 50-digit quadrature, tests/oracles/freeze.py
  const MixtureMeasure f(IteratedLogDensity{1.0});
  EXPECT_THAT(log_mixture_value(0, 1, f), DoubleNear(0.36465100328830332936, 1e-10));
  EXPECT_THAT(log_mixture_value(10, 100, f), DoubleNear(0.60791325873372674389, 1e-10));
  EXPECT_THAT(log_mixture_value(100, 1e4, f), DoubleNear(-0.14570373038527269509, 1e-10));
  EXPECT_THAT(log_mixture_value(300, 1e5, f), DoubleNear(-0.37902204492810797307, 1e-10));
}

TEST(UniformDensity, MatchesSimpson)
{
  const MixtureMeasure f(UniformDensity{0.2, 1.5, 0.7});
  for (auto [u, v] : std::vector<std::pair<double, double>>{{0, 1}, {5, 2}, {-3, 10}, {40, 30}}) {
    const double direct = simpson([&](double l) { return 0.7 * std::exp(l * u - l * l * v / 2); }, 0.2, 1.5, 20000);
    EXPECT_THAT(log_mixture_value(u, v, f), DoubleNear(std::log(direct), 1e-10)) << u << "," << v;
  }
}

TEST(Boundary, RoundTrip)
{
  const std::vector<MixtureMeasure> measures{MixtureMeasure(IteratedLogDensity{1.0}),
      MixtureMeasure(UniformDensity{0.0, 1.0, 1.0}), MixtureMeasure(PointMasses{{{0.1, 0.5}, {1.0, 0.5}}})};
  for (const auto &f : measures) {
    for (double v : {1e-1, 1.0, 1e2, 1e4, 1e6}) {
      for (double c : {2.0, 10.0, 100.0}) {
        const double u = mixture_boundary(v, c, f);
        EXPECT_LE(std::fabs(mixture_value(u, v, f) / c - 1), 1e-8) << "v=" << v << " c=" << c;
      }
    }
  }
}

TEST(Boundary, MidpointConcaveInV)
{
  const MixtureMeasure f(IteratedLogDensity{1.0});
  const double c = 2 * std::sqrt(kPi);
  for (double v = 10; v < 1e7; v *= 3) {
    const double w = 2 * v;
    const double mid = mixture_boundary(0.5 * (v + w), c, f);
    EXPECT_GE(mid, 0.5 * (mixture_boundary(v, c, f) + mixture_boundary(w, c, f)) - 1e-9 * mid) << v;
  }
}

TEST(Boundary, IncreasingInLevel)
{
  const MixtureMeasure f(IteratedLogDensity{1.0});
  EXPECT_LT(mixture_boundary(100, 2, f), mixture_boundary(100, 20, f));
  EXPECT_LT(mixture_boundary(100, 2, f), mixture_boundary(1000, 2, f));
  EXPECT_THROW(mixture_boundary(100, 0, f), DomainError);
  EXPECT_THROW(mixture_boundary(-1, 2, f), DomainError);
}

TEST(Boundary, IteratedLogAsymptoticRatioApproachesOne)
{
  const MixtureMeasure f(IteratedLogDensity{1.0});
  const double c = 2 * std::sqrt(kPi);
  double prev_gap = 1;
  for (double v : {1e4, 1e6, 1e8, 1e10}) {
    const double gap = std::fabs(mixture_boundary(v, c, f) / iterated_log_boundary_asymptotic(v, c, 1.0) - 1);
    EXPECT_LT(gap, prev_gap) << v;
    prev_gap = gap;
  }
}

TEST(CrossingBound, MassOverLevel)
{
  const MixtureMeasure f(IteratedLogDensity{1.0});
  EXPECT_DOUBLE_EQ(crossing_probability_bound(10 * f.total_mass(), f), 0.1);
  EXPECT_DOUBLE_EQ(crossing_probability_bound(0.5, f), 1.0);
}

TEST(GaussianMixture, OneDimensionalClosedForm)
{
  const GaussianMixture g(Eigen::MatrixXd::Constant(1, 1, 2.0));
  Eigen::VectorXd s(1);
  Eigen::MatrixXd q(1, 1);
  s << 1.7;
  q << 3.0;
  // sqrt(V / (V + q)) exp(s^2 / (2 (V + q)))
  const double expected = 0.5 * std::log(2.0 / 5.0) + 1.7 * 1.7 / 10;
  EXPECT_THAT(gaussian_mixture_log_value(s, q, g), DoubleNear(expected, 1e-14));
}

TEST(GaussianMixture, TwoDimensionalMatchesCubature)
{
  Eigen::MatrixXd v(2, 2);
  v << 2.0, 0.5, 0.5, 1.0;
  const GaussianMixture g(v);
  Eigen::VectorXd s(2);
  s << 0.8, -1.1;
  Eigen::MatrixXd q(2, 2);
  q << 1.5, 0.2, 0.2, 0.7;
  const Eigen::MatrixXd cov = v.inverse();
  const double det_cov = cov.determinant();
  auto integrand = [&](double x, double y) {
    Eigen::Vector2d l(x, y);
    const double gauss = std::exp(-0.5 * l.dot(v * l)) / (2 * kPi * std::sqrt(det_cov));
    return gauss * std::exp(l.dot(s) - 0.5 * l.dot(q * l));
  };
  const double direct = simpson(
      [&](double x) { return simpson([&](double y) { return integrand(x, y); }, -12, 12, 600); }, -12, 12, 600);
  EXPECT_THAT(gaussian_mixture_log_value(s, q, g), DoubleNear(std::log(direct), 1e-9));
}

TEST(GaussianMixture, WorkspaceAgreesAndCrossingIsConsistent)
{
  const GaussianMixture g(Eigen::MatrixXd::Identity(2, 2));
  GaussianMixtureWorkspace ws(g);
  Eigen::VectorXd s(2);
  Eigen::MatrixXd q = 4 * Eigen::MatrixXd::Identity(2, 2);
  for (double a : {0.0, 1.0, 3.0, 5.0}) {
    s << a, -0.5 * a;
    const double lv = gaussian_mixture_log_value(s, q, g);
    EXPECT_THAT(ws.log_value(s, q), DoubleNear(lv, 1e-13));
    for (double c : {1.5, 2.0, 10.0}) {
      EXPECT_EQ(ws.crosses(s, q, c), lv >= std::log(c));
      EXPECT_EQ(gaussian_mixture_crosses(s, q, g, c), lv >= std::log(c));
    }
  }
  EXPECT_THROW(ws.crosses(s, q, 1.0), DomainError);
  Eigen::MatrixXd bad = -10 * Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(ws.log_value(s, bad), DomainError);
}

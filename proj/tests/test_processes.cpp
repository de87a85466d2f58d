#include "selfnorm/processes.hpp"

#include <cmath>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

#include "selfnorm/error.hpp"

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

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * kPi); }

} // namespace

TEST(Laws, NormalTruncatedMeanMatchesQuadrature)
{
  const Law law = NormalLaw{2.0};
  for (auto [c, d] : std::vector<std::pair<double, double>>{{-1, 3}, {0.5, 1.5}, {-10, 0}, {-0.2, 40}}) {
    const double direct = simpson([](double x) { return x * phi(x / 2) / 2; }, c, d, 20000);
    EXPECT_THAT(truncated_mean(law, c, d), DoubleNear(direct, 1e-10)) << c << "," << d;
  }
}

TEST(Laws, DiscreteLawsByEnumeration)
{
  const Law tp = TwoPointLaw{-0.5, 1.0, 1.0 / 3};
  EXPECT_THAT(mean(tp), DoubleNear(0.0, 1e-16));
  EXPECT_THAT(truncated_mean(tp, -1, 1), DoubleNear(-0.5 * 2.0 / 3, 1e-16));
  EXPECT_THAT(truncated_mean(tp, -1, 1.0000001), DoubleNear(0.0, 1e-16));
  EXPECT_THAT(second_moment(tp), DoubleNear(0.25 * 2.0 / 3 + 1.0 / 3, 1e-16));
  EXPECT_DOUBLE_EQ(truncated_mean(RademacherLaw{}, -1, 1), -0.5);
  EXPECT_TRUE(is_symmetric(RademacherLaw{}));
  EXPECT_FALSE(is_symmetric(tp));
}

TEST(Laws, CenteredExponentialAndUniform)
{
  const Law e = CenteredExponentialLaw{1.5};
  auto dens = [](double x) { return std::exp(-(x / 1.5 + 1)) / 1.5; };
  EXPECT_THAT(truncated_mean(e, -1, 2), DoubleNear(simpson([&](double x) { return x * dens(x); }, -1, 2, 20000), 1e-10));
  EXPECT_THAT(mean(e), DoubleNear(0, 1e-15));
  EXPECT_THAT(second_moment(e), DoubleNear(2.25, 1e-14));
  const Law u = UniformLaw{-1, 3};
  EXPECT_THAT(truncated_mean(u, 0, 2), DoubleNear(0.5, 1e-15));
}

TEST(Laws, TwoSidedParetoPartialMean)
{
  const double alpha = 1.5, d1 = 0.3, d2 = 0.2;
  const Law law = TwoSidedParetoLaw{alpha, d1, d2};
  // E[Y 1(-a <= Y < b)] = d1 alpha int_1^b y^-alpha dy - d2 alpha int_1^a y^-alpha dy
  auto part = [&](double t) { return alpha * (std::pow(t, 1 - alpha) - 1) / (1 - alpha); };
  EXPECT_THAT(truncated_mean(law, -4, 9), DoubleNear(d1 * part(9) - d2 * part(4), 1e-13));
  EXPECT_DOUBLE_EQ(truncated_mean(law, -0.5, 0.5), 0.0);
}

TEST(Laws, MonteCarloAgreesWithTruncatedMean)
{
  const std::vector<Law> laws{NormalLaw{1.0}, SignedScaleLaw{LognormalScale{0, 1}}, CenteredExponentialLaw{1.0},
      TwoSidedParetoLaw{2.5, 0.3, 0.2}, UniformLaw{-1, 2}};
  for (const auto &law : laws) {
    Rng rng(99);
    const int n = 400000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = sample(law, rng);
      const double y = (-0.7 <= x && x < 1.3) ? x : 0.0;
      s += y;
      s2 += y * y;
    }
    const double m = s / n, se = std::sqrt((s2 / n - m * m) / n);
    EXPECT_LT(std::fabs(m - truncated_mean(law, -0.7, 1.3)), 5 * se);
  }
}

TEST(Laws, ValidationRejectsBadParameters)
{
  EXPECT_THROW(validate(NormalLaw{-1}), ConfigError);
  EXPECT_THROW(validate(TwoPointLaw{1, -1, 0.5}), ConfigError);
  EXPECT_THROW(validate(TwoSidedParetoLaw{1.5, 0.8, 0.5}), ConfigError);
}

TEST(TimeGrid, StepsRoundTrip)
{
  const TimeGrid uni{TimeGrid::Kind::Uniform, 0.25, 0, 0, {}};
  const TimeGrid geo{TimeGrid::Kind::Geometric, 0, 1e-4, 1.002, {}};
  for (std::uint64_t k : {1, 2, 17, 1000, 11526}) {
    EXPECT_EQ(uni.steps_to(uni.time(k)), k);
    EXPECT_EQ(geo.steps_to(geo.time(k)), k);
  }
  EXPECT_EQ(uni.time(0), 0);
  EXPECT_DOUBLE_EQ(uni.time(8), 2.0);
  EXPECT_GE(geo.time(geo.steps_to(1e6)), 1e6);
  EXPECT_LT(geo.time(geo.steps_to(1e6) - 1), 1e6);
}

TEST(Process, RademacherState)
{
  auto p = make_process(spec::Rademacher{}, 5);
  double a = 0;
  for (int i = 1; i <= 200; ++i) {
    const auto &st = p.step();
    a += st.last;
    EXPECT_EQ(std::fabs(st.last), 1.0);
    EXPECT_EQ(st.n, static_cast<std::uint64_t>(i));
    EXPECT_EQ(st.a_n, a);
    EXPECT_EQ(st.b_pow_r, i);
    EXPECT_EQ(st.v_n_sq, i);
  }
  EXPECT_THAT(p.log_exp_supermartingale(0.5), DoubleNear(0.5 * a - 0.125 * 200, 1e-12));
}

TEST(Process, SeedDeterminesPath)
{
  auto a = make_process(spec::BrownianGrid{}, 11), b = make_process(spec::BrownianGrid{}, 11),
       c = make_process(spec::BrownianGrid{}, 12);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double xa = a.step().a_n, xb = b.step().a_n, xc = c.step().a_n;
    EXPECT_EQ(xa, xb);
    differs |= xa != xc;
  }
  EXPECT_TRUE(differs);
  EXPECT_NE(path_seed(1, 0), path_seed(1, 1));
  EXPECT_NE(path_seed(1, 0), path_seed(2, 0));
}

TEST(Process, LambdaZeroIsExactEverywhere)
{
  const std::vector<ProcessSpec> specs{spec::Rademacher{}, spec::Bernstein{}, spec::BoundedBelow{},
      spec::ThreePointJump{}, spec::TruncatedCentering{TwoSidedParetoLaw{1.5, 0.3, 0.2}, 0.5}};
  for (const auto &s : specs) {
    auto p = make_process(s, 3);
    for (int i = 0; i < 50; ++i)
      p.step();
    EXPECT_EQ(p.exp_supermartingale_value(0), 1.0) << process_name(s);
  }
}

TEST(Process, CertificationIsEnforced)
{
  auto p = make_process(spec::Bernstein{1.0, 0.5}, 1);
  p.step();
  EXPECT_NO_THROW(p.log_exp_supermartingale(0.5));
  EXPECT_THROW(p.log_exp_supermartingale(0.6), CertificationError);
  EXPECT_THROW(p.log_exp_supermartingale(-0.1), CertificationError);
  auto q = make_process(spec::ThreePointJump{}, 1);
  q.step();
  EXPECT_THROW(q.log_exp_supermartingale(0.1), CertificationError);
  EXPECT_THROW(make_process(spec::BoundedAbove{1.0, 2.0, TwoPointLaw{-0.5, 1.0, 1.0 / 3}}, 1), ConfigError);
}

// E exp(lambda d - lambda^2 B^2 / 2) <= 1 per step, from the exact moment
// generating function of each law.
TEST(Certificates, BernsteinExactMgf)
{
  for (double rho : {0.1, 0.5, 0.9}) {
    for (double m : {0.5, 1.0, 3.0}) {
      const PreparedSpec prep(spec::Bernstein{m, rho});
      const double lmax = prep.certification().lambda_max;
      for (int i = 0; i <= 100; ++i) {
        const double l = lmax * i / 100 * (1 - 1e-12);
        // E exp(l m (E - 1)) = exp(-l m) / (1 - l m)
        const double log_mgf = -l * m - std::log1p(-l * m);
        EXPECT_LE(log_mgf - 0.5 * l * l * m * m / rho, 1e-15) << rho << " " << m << " " << l;
      }
    }
  }
}

TEST(Certificates, BoundedAboveExactMgf)
{
  const std::vector<TwoPointLaw> laws{{-0.5, 1.0, 1.0 / 3}, {-0.1, 1.0, 1.0 / 11}, {-2.0, 0.5, 0.8}};
  for (const auto &law : laws) {
    const spec::BoundedAbove s{1.0, 1.0, law};
    const PreparedSpec prep(s);
    const double b2 = (1 + 0.5 * s.lambda0 * s.m) * second_moment(law);
    for (int i = 0; i <= 100; ++i) {
      const double l = prep.certification().lambda_max * i / 100;
      const double mgf = (1 - law.p_high) * std::exp(l * law.low) + law.p_high * std::exp(l * law.high);
      EXPECT_LE(std::log(mgf) - 0.5 * l * l * b2, 1e-15) << l;
    }
  }
}

TEST(Certificates, BoundedBelowPowerCompensator)
{
  for (double r : {1.25, 1.5, 2.0}) {
    const spec::BoundedBelow s{1.0, 0.5, r, CenteredExponentialLaw{1.0}};
    const PreparedSpec prep(s);
    const double c = prep.power_constant();
    for (double l : {0.1, 0.25, 0.5}) {
      // d = E - 1 with E unit exponential
      auto f = [&](double e) {
        const double d = e - 1;
        return std::exp(-e) * std::exp(l * d - c * std::pow(l * std::fabs(d), r));
      };
      EXPECT_LE(simpson(f, 0, 60, 60000), 1 + 1e-10) << "r=" << r << " lambda=" << l;
    }
  }
}

TEST(ThreePoint, LawIsCentered)
{
  for (std::uint64_t n : {10, 11, 100, 10000, 1000000}) {
    const DiscreteLaw law = three_point_law(n);
    double p = 0, m = 0;
    for (int k = 0; k < 3; ++k) {
      p += law.probs[k];
      m += law.probs[k] * law.values[k];
      EXPECT_GE(law.probs[k], 0);
    }
    EXPECT_THAT(p, DoubleNear(1, 1e-15)) << n;
    EXPECT_THAT(m, DoubleNear(0, 1e-15)) << n;
    EXPECT_THAT(law.values[2], DoubleNear(1 / std::sqrt(static_cast<double>(n)), 1e-15));
  }
  const DiscreteLaw early = three_point_law(5);
  EXPECT_EQ(mean(Law{early}), 0.0);
  EXPECT_EQ(second_moment(Law{early}), 0.0);
}

TEST(ThreePoint, TruncatedVariantTracksTruncatedPart)
{
  auto p = make_process(spec::ThreePointTruncated{}, 21);
  double y = 0;
  for (int i = 0; i < 5000; ++i) {
    const auto &st = p.step();
    if (std::fabs(st.last) <= 1)
      y += st.last;
    EXPECT_THAT(st.trunc_sum, DoubleNear(y, 1e-9));
  }
}

TEST(TruncatedTracking, ValueMatchesDirectSum)
{
  const spec::TruncatedCentering s{NormalLaw{1.0}, 0.5};
  auto p = make_process(s, 4);
  TruncatedTracking t;
  t.gamma = 0.5;
  t.lambda = 1.25;
  t.r = 2;
  const auto idx = p.track_truncated(prepare_tracking(t));
  double log_value = 0;
  for (int i = 1; i <= 300; ++i) {
    const auto &st = p.step();
    const double mu = truncated_mean(Law{NormalLaw{1.0}}, -0.5, 1.25);
    log_value += st.last - mu - st.last * st.last / 1.25;
    EXPECT_THAT(p.log_truncated_supermartingale(idx), DoubleNear(log_value, 1e-9 * std::max(1.0, std::fabs(log_value))));
  }
  EXPECT_THROW(p.track_truncated(prepare_tracking(t)), ConfigError);
}

TEST(WeightedIID, FactorialWeights)
{
  EXPECT_EQ(weight_at(1, spec::WeightRule::Factorial), 1);
  EXPECT_EQ(weight_at(5, spec::WeightRule::Factorial), 120);
  EXPECT_EQ(weight_at(5, spec::WeightRule::Unit), 1);
  const PreparedSpec prep(spec::WeightedIID{spec::WeightRule::Factorial, NormalLaw{}});
  EXPECT_LT(prep.max_steps(), 200u);
}

TEST(MvBrownian, QuadraticVariationIsTimeTimesIdentity)
{
  spec::MvBrownianGrid s;
  s.dim = 3;
  auto p = make_process(s, 8);
  for (int i = 0; i < 100; ++i) {
    const auto &st = p.step();
    EXPECT_EQ(st.mv_sum.size(), 3);
    EXPECT_TRUE(st.mv_qv.isApprox(st.time * Eigen::MatrixXd::Identity(3, 3)));
    EXPECT_EQ(st.a_n, st.mv_sum(0));
  }
}

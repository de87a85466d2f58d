#include "selfnorm/laws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "selfnorm/error.hpp"

namespace selfnorm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double in_window(double x, double c, double d) { return (c <= x && x < d) ? x : 0.0; }

// E[Z 1(a <= Z < b)] for a positive scale Z.
double scale_partial_mean(const LognormalScale &s, double a, double b)
{
  a = std::max(a, 0.0);
  if (!(b > a))
    return 0.0;
  const double m = std::exp(s.mu + 0.5 * s.sigma * s.sigma);
  auto z = [&](double x) {
    if (x <= 0)
      return -kInf;
    if (x == kInf)
      return kInf;
    return (std::log(x) - s.mu - s.sigma * s.sigma) / s.sigma;
  };
  // Upper tail difference keeps precision when both ends are far right.
  const double za = z(a), zb = z(b);
  if (za > 0)
    return m * (normal_cdf(-za) - normal_cdf(-zb));
  return m * (normal_cdf(zb) - normal_cdf(za));
}

// alpha int_a^b z^-alpha dz for 1 <= a < b.
double power_integral(double alpha, double a, double b)
{
  if (!(b > a))
    return 0.0;
  if (alpha == 1)
    return b == kInf ? kInf : std::log(b / a);
  if (b == kInf)
    return alpha < 1 ? kInf : alpha * std::pow(a, 1 - alpha) / (alpha - 1);
  return alpha * (std::pow(b, 1 - alpha) - std::pow(a, 1 - alpha)) / (1 - alpha);
}

double scale_partial_mean(const ParetoScale &s, double a, double b)
{
  return power_integral(s.alpha, std::max(a, 1.0), b);
}

double scale_second_moment(const LognormalScale &s)
{
  return std::exp(2 * s.mu + 2 * s.sigma * s.sigma);
}

double scale_second_moment(const ParetoScale &s)
{
  return s.alpha > 2 ? s.alpha / (s.alpha - 2) : kInf;
}

double sample_scale(const LognormalScale &s, Rng &rng)
{
  return std::exp(s.mu + s.sigma * rng.normal());
}

double sample_scale(const ParetoScale &s, Rng &rng)
{
  return std::pow(rng.uniform(), -1 / s.alpha);
}

} // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x)
{
  if (std::isinf(x))
    return 0.0;
  return std::exp(-0.5 * x * x) / std::sqrt(2 * 3.14159265358979323846);
}

void validate(const Law &law)
{
  std::visit(Overloaded{
                 [](const RademacherLaw &) {},
                 [](const NormalLaw &l) {
                   if (!(l.sd > 0))
                     throw ConfigError("normal law needs sd > 0");
                 },
                 [](const SignedScaleLaw &l) {
                   std::visit(Overloaded{
                                  [](const LognormalScale &s) {
                                    if (!(s.sigma > 0) || !std::isfinite(s.mu))
                                      throw ConfigError("lognormal scale needs sigma > 0");
                                  },
                                  [](const ParetoScale &s) {
                                    if (!(s.alpha > 0))
                                      throw ConfigError("pareto scale needs alpha > 0");
                                  },
                              },
                       l.scale);
                 },
                 [](const TwoPointLaw &l) {
                   if (!(l.low < l.high) || !(l.p_high > 0 && l.p_high < 1))
                     throw ConfigError("two-point law needs low < high and 0 < p < 1");
                 },
                 [](const UniformLaw &l) {
                   if (!(l.lo < l.hi))
                     throw ConfigError("uniform law needs lo < hi");
                 },
                 [](const CenteredExponentialLaw &l) {
                   if (!(l.scale > 0))
                     throw ConfigError("centered exponential needs scale > 0");
                 },
                 [](const TwoSidedParetoLaw &l) {
                   if (!(l.alpha > 0) || !(l.d1 >= 0) || !(l.d2 >= 0)
                       || !(l.d1 + l.d2 > 0) || !(l.d1 + l.d2 <= 1))
                     throw ConfigError(
                         "two-sided pareto needs alpha > 0, d1, d2 >= 0, 0 < d1 + d2 <= 1");
                 },
                 [](const DiscreteLaw &l) {
                   double total = 0;
                   for (double p : l.probs) {
                     if (!(p >= 0))
                       throw ConfigError("discrete law has a negative probability");
                     total += p;
                   }
                   if (std::fabs(total - 1) > 1e-12)
                     throw ConfigError("discrete law probabilities must sum to 1");
                 },
             },
      law);
}

double sample(const Law &law, Rng &rng)
{
  return std::visit(
      Overloaded{
          [&](const RademacherLaw &) { return rng.sign(); },
          [&](const NormalLaw &l) { return l.sd * rng.normal(); },
          [&](const SignedScaleLaw &l) {
            const double s = rng.sign();
            return s * std::visit([&](const auto &sc) { return sample_scale(sc, rng); },
                           l.scale);
          },
          [&](const TwoPointLaw &l) { return rng.uniform() < l.p_high ? l.high : l.low; },
          [&](const UniformLaw &l) { return l.lo + (l.hi - l.lo) * rng.uniform(); },
          [&](const CenteredExponentialLaw &l) { return l.scale * (rng.exponential() - 1); },
          [&](const TwoSidedParetoLaw &l) {
            const double u = rng.uniform();
            if (u < l.d1)
              return std::pow(u / l.d1, -1 / l.alpha);
            if (u < l.d1 + l.d2)
              return -std::pow((u - l.d1) / l.d2, -1 / l.alpha);
            return 0.0;
          },
          [&](const DiscreteLaw &l) {
            const double u = rng.uniform();
            double acc = 0;
            for (int i = 0; i < 2; ++i) {
              acc += l.probs[i];
              if (u < acc)
                return l.values[i];
            }
            return l.values[2];
          },
      },
      law);
}

double truncated_mean(const Law &law, double c, double d)
{
  if (!(c < d))
    throw DomainError("truncated mean needs c < d");
  return std::visit(
      Overloaded{
          [&](const RademacherLaw &) {
            return 0.5 * (in_window(1.0, c, d) + in_window(-1.0, c, d));
          },
          [&](const NormalLaw &l) {
            return l.sd * (normal_pdf(c / l.sd) - normal_pdf(d / l.sd));
          },
          [&](const SignedScaleLaw &l) {
            // +Z lands in [c, d) for Z in [c, d); -Z for Z in (-d, -c].
            return std::visit(
                [&](const auto &sc) {
                  return 0.5 * (scale_partial_mean(sc, c, d) - scale_partial_mean(sc, -d, -c));
                },
                l.scale);
          },
          [&](const TwoPointLaw &l) {
            return l.p_high * in_window(l.high, c, d)
                + (1 - l.p_high) * in_window(l.low, c, d);
          },
          [&](const UniformLaw &l) {
            const double a = std::max(c, l.lo), b = std::min(d, l.hi);
            if (!(b > a))
              return 0.0;
            return (b * b - a * a) / (2 * (l.hi - l.lo));
          },
          [&](const CenteredExponentialLaw &l) {
            // int (e - 1) e^-e de = -e e^-e.
            const double e1 = std::max(c / l.scale + 1, 0.0);
            const double e2 = d / l.scale + 1;
            if (!(e2 > e1))
              return 0.0;
            auto f = [](double e) { return e == kInf ? 0.0 : e * std::exp(-e); };
            return l.scale * (f(e1) - f(e2));
          },
          [&](const TwoSidedParetoLaw &l) {
            const double pos = l.d1 > 0 ? l.d1 * power_integral(l.alpha, std::max(c, 1.0), d) : 0.0;
            const double neg = l.d2 > 0 ? l.d2 * power_integral(l.alpha, std::max(-d, 1.0), -c) : 0.0;
            return pos - neg;
          },
          [&](const DiscreteLaw &l) {
            double s = 0;
            for (int i = 0; i < 3; ++i)
              s += l.probs[i] * in_window(l.values[i], c, d);
            return s;
          },
      },
      law);
}

double second_moment(const Law &law)
{
  return std::visit(
      Overloaded{
          [](const RademacherLaw &) { return 1.0; },
          [](const NormalLaw &l) { return l.sd * l.sd; },
          [](const SignedScaleLaw &l) {
            return std::visit([](const auto &sc) { return scale_second_moment(sc); }, l.scale);
          },
          [](const TwoPointLaw &l) {
            return l.p_high * l.high * l.high + (1 - l.p_high) * l.low * l.low;
          },
          [](const UniformLaw &l) { return (l.lo * l.lo + l.lo * l.hi + l.hi * l.hi) / 3; },
          [](const CenteredExponentialLaw &l) { return l.scale * l.scale; },
          [](const TwoSidedParetoLaw &l) {
            return l.alpha > 2 ? (l.d1 + l.d2) * l.alpha / (l.alpha - 2) : kInf;
          },
          [](const DiscreteLaw &l) {
            double s = 0;
            for (int i = 0; i < 3; ++i)
              s += l.probs[i] * l.values[i] * l.values[i];
            return s;
          },
      },
      law);
}

double mean(const Law &law)
{
  return truncated_mean(law, -kInf, kInf);
}

bool is_symmetric(const Law &law)
{
  return std::visit(
      Overloaded{
          [](const RademacherLaw &) { return true; },
          [](const NormalLaw &) { return true; },
          [](const SignedScaleLaw &) { return true; },
          [](const TwoPointLaw &l) { return l.low == -l.high && l.p_high == 0.5; },
          [](const UniformLaw &l) { return l.lo == -l.hi; },
          [](const CenteredExponentialLaw &) { return false; },
          [](const TwoSidedParetoLaw &l) { return l.d1 == l.d2; },
          [](const DiscreteLaw &) { return false; },
      },
      law);
}

} // namespace selfnorm

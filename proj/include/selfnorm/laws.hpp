#pragma once

#include <array>
#include <variant>

#include "selfnorm/rng.hpp"

namespace selfnorm {

// Scalar laws used by the process generators. Each knows how to sample
// itself and its truncated first moment E[X 1(c <= X < d)].

struct RademacherLaw {};

struct NormalLaw {
  double sd = 1.0;
};

// Positive scale with log Z ~ N(mu, sigma^2).
struct LognormalScale {
  double mu = 0.0;
  double sigma = 1.0;
};

// Positive scale with P(Z > z) = z^-alpha for z >= 1.
struct ParetoScale {
  double alpha = 1.0;
};

// epsilon Z with a fair sign epsilon independent of Z > 0.
struct SignedScaleLaw {
  std::variant<LognormalScale, ParetoScale> scale;
};

// `high` with probability p_high, otherwise `low`.
struct TwoPointLaw {
  double low;
  double high;
  double p_high;
};

struct UniformLaw {
  double lo;
  double hi;
};

// scale (E - 1) with E unit exponential.
struct CenteredExponentialLaw {
  double scale = 1.0;
};

// P(Y >= y) = d1 y^-alpha and P(Y <= -y) = d2 y^-alpha for y >= 1, with
// the remaining mass 1 - d1 - d2 at zero.
struct TwoSidedParetoLaw {
  double alpha;
  double d1;
  double d2;
};

// Up to three atoms; unused slots carry probability zero.
struct DiscreteLaw {
  std::array<double, 3> values{};
  std::array<double, 3> probs{};
};

using Law = std::variant<RademacherLaw, NormalLaw, SignedScaleLaw, TwoPointLaw,
    UniformLaw, CenteredExponentialLaw, TwoSidedParetoLaw, DiscreteLaw>;

void validate(const Law &law);
double sample(const Law &law, Rng &rng);
double truncated_mean(const Law &law, double c, double d);
double second_moment(const Law &law);
double mean(const Law &law);
bool is_symmetric(const Law &law);

double normal_cdf(double x);
double normal_pdf(double x);

} // namespace selfnorm

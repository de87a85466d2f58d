#pragma once

namespace selfnorm {

// Smallest C with exp(x - C x^2) <= 1 + x on [-gamma, inf):
// C = -(gamma + log(1 - gamma)) / gamma^2, equal to 1/2 at gamma = 0.
double quadratic_slack(double gamma);

// -(gamma + log(1 - gamma)) / gamma^r, the constant needed on [-gamma, 0].
double left_power_slack(double gamma, double r);

// inf{c > 0 : exp(x - c x^r) <= 1 + x for all x >= 0}, found by bisection
// on c with a grid-plus-golden-section feasibility check.
double right_power_slack(double r);

// (r-1)^(r-1) (2-r)^(2-r) / r with 0^0 = 1; an upper bound for
// right_power_slack.
double right_power_slack_bound(double r);

// max(right_power_slack(r), left_power_slack(gamma, r)): makes
// exp(x - c|x|^r) <= 1 + x hold for every x >= -gamma.
double power_slack(double gamma, double r);

// Positive root h of h - log(1 + h) = lambda^2.
double lil_root(double lambda);

struct LilConstants {
  double lambda;
  double root;        // h solving h - log(1 + h) = lambda^2
  double limsup;      // h / lambda, the almost-sure bound after centering
  double slack_gamma; // h / (1 + h)
  double upper_scale; // lambda / (slack_gamma * quadratic_slack(slack_gamma))
};

LilConstants lil_constants(double lambda);

// L(y) = beta log(y + alpha) loglog(y + alpha) logloglog(y + alpha)^(1 + delta)
struct IteratedLogWeight {
  double alpha = 1e20;
  double delta = 1.0;
  double beta = 1.0;
};

// Evaluate L(y); throws DomainError when logloglog(y + alpha) <= 0.
double iterated_log_weight(double y, const IteratedLogWeight &w);

// int_1^inf dx / (x L(x)) for the given parameters (beta included).
double iterated_log_integral(const IteratedLogWeight &w);

// beta making the integral above equal to 1/2. Does not check growth.
double iterated_log_normalizer(double alpha, double delta);

struct GrowthCheck {
  double max_scale_ratio;  // max L(cy) / (c L(y)) over y in [1e-6, 1e12], c in [1, 1e6]
  double max_square_ratio; // max L(y^2) / L(y) over y in [1, 1e12]
  bool ok() const { return max_scale_ratio <= 3 && max_square_ratio <= 3; }
};

GrowthCheck check_growth(const IteratedLogWeight &w, double y_max = 1e12);

// Normalized weight with both growth conditions verified; throws DomainError
// when alpha is too small for them to hold.
IteratedLogWeight make_iterated_log_weight(double alpha = 1e20,
    double delta = 1.0);

// exp(x^2 / 2) / x for x >= 1, zero below; +inf past the double range.
double gaussian_tilt(double x);

struct PowerTilt {
  double peak;  // w^(1 / (r - 1)), where w y - y^r / r is maximized
  double value; // peak^-1 exp((1 - 1/r) w^(r / (r - 1))), +inf on overflow
};

PowerTilt power_tilt(double w, double r);

// Gamma(p) for 0 < p <= 50 (upward recurrence plus Stirling series).
double gamma_function(double p);

} // namespace selfnorm

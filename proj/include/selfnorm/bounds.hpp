#pragma once

#include <cmath>

namespace selfnorm {

inline constexpr double kIteratedLogFloor = 7.38905609893064951876; // e^2

// A pair (A, B) with E exp(lambda A - (lambda B)^r / r) <= 1.
struct SelfNormSample {
  double a = 0;
  double b = 1;
  double r = 2;
};

// y / sqrt(B^2 + y^2) exp(A^2 / (2 (B^2 + y^2))); has mean <= 1 whenever
// the exponential moment condition holds for every real lambda.
double mixture_integrand(const SelfNormSample &s, double y);
double log_mixture_integrand(const SelfNormSample &s, double y);

// sqrt(2) exp(x^2), bound on E exp(x |A| / sqrt(B^2 + (EB)^2)).
double mgf_bound(double x);

// 2^(p - 1/2) p Gamma(p/2), bound on E |A / sqrt(B^2 + (EB)^2)|^p.
double abs_moment_bound(double p);

// |A| / sqrt((B^2 + y) (1 + log(B^2 / y + 1) / 2)).
double log_corrected_statistic(const SelfNormSample &s, double y);

// exp(-x^2 / 2) for x >= sqrt(2), the trivial bound 1 below.
double log_corrected_tail_bound(double x);

// 2^(p/2) + 2^((p-2)/2) p Gamma(p/2), moment bound for the statistic above.
double log_corrected_moment_bound(double p);

// a / ((b v floor) loglog(b v floor)^((r-1)/r)).
double lil_statistic(double a, double b, double r = 2,
    double floor = kIteratedLogFloor);

// (s_n - centering) / ((v_n v floor) sqrt(loglog(v_n v floor))).
double universal_statistic(double s_n, double centering, double v_n,
    double floor = kIteratedLogFloor);

// Almost-sure limsup of the lil_statistic for martingales with the r-power
// compensator: (r / (r - 1))^((r - 1) / r); sqrt(2) at r = 2.
double lil_limsup(double r);

} // namespace selfnorm

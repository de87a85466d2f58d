#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "selfnorm/constants.hpp"
#include "selfnorm/laws.hpp"
#include "selfnorm/numerics.hpp"
#include "selfnorm/rng.hpp"

namespace selfnorm {

struct TimeGrid {
  enum class Kind { Uniform, Geometric, Explicit };
  Kind kind = Kind::Uniform;
  double dt = 1.0;       // Uniform: t_k = k dt
  double t0 = 1e-4;      // Geometric: t_k = t0 ratio^(k-1)
  double ratio = 1.002;
  std::vector<double> times; // Explicit, strictly increasing and positive

  // Time after k steps (t_0 = 0).
  double time(std::uint64_t k) const;
  // Smallest k with time(k) >= t.
  std::uint64_t steps_to(double t) const;
};

namespace spec {

// Fair +-1 increments.
struct Rademacher {};

// epsilon_i Z_i with fair signs and i.i.d. positive scales.
struct ScaledSymmetric {
  std::variant<LognormalScale, ParetoScale> scale;
};

// Increments d <= m with E d <= 0; B^2 = (1 + lambda0 m / 2) sum E d^2.
struct BoundedAbove {
  double m = 1.0;
  double lambda0 = 1.0;
  Law law = TwoPointLaw{-0.5, 1.0, 1.0 / 3};
};

// d = m (E - 1); B^2 = sum E d^2 / rho, certified on [0, (1 - rho) / m].
struct Bernstein {
  double m = 1.0;
  double rho = 0.5;
};

// Increments d >= -m with E d <= 0; B^r = r c sum |d|^r with c the power
// slack constant for (gamma, r); certified on [0, gamma / m].
struct BoundedBelow {
  double m = 1.0;
  double gamma = 0.5;
  double r = 1.5;
  Law law = CenteredExponentialLaw{1.0};
};

// Standard Brownian motion sampled on a time grid; B^2 = t.
struct BrownianGrid {
  TimeGrid grid;
};

// m-dimensional standard Brownian motion; the scalar fields track the
// first coordinate, the full state lives in PathState::mv_sum / mv_qv.
struct MvBrownianGrid {
  int dim = 2;
  TimeGrid grid{TimeGrid::Kind::Geometric, 1.0, 1e-4, 1.002, {}};
};

// i.i.d. increments centered by sum_i E[X 1(-lambda v_n <= X < a v_n)], with
// v_n = V_n loglog(V_n v e^2)^(-1/2) and a the upper truncation scale.
struct TruncatedCentering {
  Law law = NormalLaw{};
  double lambda = 0.5;
};

enum class WeightRule { Unit, Factorial };

// S_n = sum w_i Y_i with deterministic weights.
struct WeightedIID {
  WeightRule rule = WeightRule::Unit;
  Law law = RademacherLaw{};
};

// Independent three-point increments with exact mean zero: -n^-1/2, +n^-1/2
// and a rare jump to -m_n, m_n ~ 2 (log n)^(5/2). The stated probabilities
// are only valid from n = 10 on; earlier increments are zero.
struct ThreePointJump {};

// The same sequence, additionally tracking the truncated part
// Y_n = X_n 1(|X_n| <= 1) and the conditional variance sum s_n^2.
struct ThreePointTruncated {};

} // namespace spec

using ProcessSpec = std::variant<spec::Rademacher, spec::ScaledSymmetric,
    spec::BoundedAbove, spec::Bernstein, spec::BoundedBelow,
    spec::BrownianGrid, spec::MvBrownianGrid, spec::TruncatedCentering,
    spec::WeightedIID, spec::ThreePointJump, spec::ThreePointTruncated>;

std::string process_name(const ProcessSpec &s);

struct Certification {
  enum class Kind {
    AllReal,    // E exp(lambda A - lambda^2 B^2 / 2) <= 1 for every real lambda
    Restricted, // supermartingale for 0 <= lambda <= lambda_max
    None
  };
  Kind kind = Kind::None;
  double lambda_max = 0;
  double r = 2;
  std::string basis;

  bool covers(double lambda) const;
};

struct PathState {
  std::uint64_t n = 0;
  double a_n = 0;      // sum of increments
  double b_pow_r = 0;  // certified B_n^r
  double v_n_sq = 0;   // sum of squared increments
  double mu_sum = 0;   // truncated-mean centering (TruncatedCentering)
  double cond_var = 0; // sum of E(d_i^2 | F_(i-1)) where known
  double time = 0;     // grid time (Brownian variants)
  double last = 0;     // latest increment
  // Three-point variants: sums of Y_i = X_i 1(|X_i| <= 1), of Y_i^2, and
  // of E Y_i.
  double trunc_sum = 0;
  double trunc_sq_sum = 0;
  double trunc_mean_sum = 0;
  Eigen::VectorXd mv_sum;
  Eigen::MatrixXd mv_qv;
};

// Parameters of exp{sum (Y_i - mu_i - |Y_i|^r / lambda_i)} with
// Y_i = X_i / scale and mu_i = E[Y_i 1(-gamma_i <= Y_i < lambda_i^(1/(r-1)))].
struct TruncatedTracking {
  double gamma = 0.5;
  double lambda = 1.0;
  double r = 2.0;
  double scale = 1.0;
  // Optional per-step (gamma_i, lambda_i) from the state before step i;
  // only supported for r = 2.
  std::function<std::pair<double, double>(const PathState &)> schedule;
  // Slack constant for (gamma, r); filled by prepare_tracking so that
  // handles do not recompute it.
  double slack = 0;
};

// Validate constant tracking parameters and fill in the slack constant.
TruncatedTracking prepare_tracking(TruncatedTracking params);

// A validated spec with its derived constants; shared by many handles.
class PreparedSpec {
public:
  explicit PreparedSpec(ProcessSpec spec);

  const ProcessSpec &spec() const { return spec_; }
  const Certification &certification() const { return cert_; }
  // Law of the n-th increment (1-based); throws UnsupportedError for the
  // multivariate generator.
  Law law_at(std::uint64_t n) const;
  bool has_law() const;
  double power_constant() const { return power_constant_; }
  const LilConstants &lil() const { return lil_; }
  std::uint64_t max_steps() const { return max_steps_; }

private:
  ProcessSpec spec_;
  Certification cert_;
  double power_constant_ = 0;
  LilConstants lil_{};
  std::uint64_t max_steps_;
};

class Process {
public:
  Process(std::shared_ptr<const PreparedSpec> spec, std::uint64_t seed);

  const PathState &step();
  const PathState &state() const { return state_; }
  const PreparedSpec &prepared() const { return *spec_; }
  const Certification &certification() const { return spec_->certification(); }

  // E[X_n 1(c <= X_n < d) | F_(n-1)] from the known law of step n.
  double truncated_mean(std::uint64_t n, double c, double d) const;

  // lambda a_n - lambda^r b_pow_r / r; throws CertificationError outside
  // the certified range (lambda = 0 is exact for every generator).
  double log_exp_supermartingale(double lambda) const;
  double exp_supermartingale_value(double lambda) const;

  // Register a truncated supermartingale; only allowed before the first step.
  std::size_t track_truncated(TruncatedTracking params);
  double log_truncated_supermartingale(std::size_t index = 0) const;
  double truncated_supermartingale_value(std::size_t index = 0) const;

private:
  struct Tracker {
    TruncatedTracking params;
    CompensatedSum log_value;
    bool vanished = false; // value underflowed to zero
  };

  void advance_trackers(double x);

  std::shared_ptr<const PreparedSpec> spec_;
  Rng rng_;
  PathState state_;
  std::vector<Tracker> trackers_;
  CompensatedSum a_, v_, b_, cond_var_, trunc_, trunc_sq_, trunc_mean_;
};

inline Process make_process(const ProcessSpec &spec, std::uint64_t seed)
{
  return Process(std::make_shared<const PreparedSpec>(spec), seed);
}

// Law of the three-point increment at step n: values (-n^-1/2, -m_n,
// n^-1/2) with m_n solving E X_n = 0; the point mass at zero for n < 10.
DiscreteLaw three_point_law(std::uint64_t n);

// w_i for the weighted i.i.d. generator (1 or i!).
double weight_at(std::uint64_t i, spec::WeightRule rule);

} // namespace selfnorm

#pragma once
//
// Bergman kernel of a radial weight from its odd moments,
//   B_z(zeta) = sum_n (conj(z) zeta)^n / (2 omega_{2n+1}),
// its integral means over circles and its weighted norms.
//

#include <complex>
#include <vector>

#include "bergman/radial_weights.hpp"

namespace bergman {

struct KernelOptions {
  double tail_tolerance = 1e-16;  ///< relative series cut
  long term_budget = 0;           ///< 0: 2^22 for weights in D-hat, 2^16 otherwise
  int classify_levels = 20;       ///< grid depth used to decide D-hat membership
};

struct KernelValue {
  std::complex<double> value;
  double error_bound = 0.0;  ///< absolute
  long terms = 0;
};

/// Coefficients a_n = 1/(2 omega_{2n+1}). Immutable after construction.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(RadialWeight weight, const KernelOptions& options = {});

  const RadialWeight& weight() const { return weight_; }
  const KernelOptions& options() const { return options_; }

  double log_coefficient(long n) const;
  double coefficient(long n) const { return std::exp(log_coefficient(n)); }

  long term_budget() const { return budget_; }
  /// False for weights outside D-hat: the series is capped at a smaller
  /// budget and results near the boundary are not available.
  bool accurate() const { return in_dhat_; }

  /// Least-squares slope of log a_n against log n over the sampled range.
  double growth_slope() const;

  /// B_z(zeta). Throws DomainError if |z|,|zeta| >= 1 and NumericError if the
  /// series needs more than the term budget.
  KernelValue eval(std::complex<double> z, std::complex<double> zeta) const;
  /// Series sum_n a_n w^n.
  KernelValue series(std::complex<double> w) const;

  /// log of the terms a_n x^n for n = 0..N, where N is the first index at
  /// which the series sum_n a_n x^n satisfies the truncation rule.
  std::vector<double> log_terms(Radius x) const;

 private:
  RadialWeight weight_;
  KernelOptions options_;
  long budget_ = 0;
  bool in_dhat_ = true;
  std::vector<double> direct_;  ///< log a_n, n < kDirect
  double log_x0_ = 0.0, step_ = 0.0;
  std::vector<double> samples_;  ///< log omega_x on a uniform log x grid
};

/// p-th integral mean of B_a over |zeta| = r, a function of x = |a| r only.
/// Periodic trapezoid rule in theta with node doubling until successive
/// values agree to 1e-9 relative.
double circle_mean(const KernelEvaluator& k, double p, Radius x);
double circle_mean(const KernelEvaluator& k, double p, double x);
double log_circle_mean(const KernelEvaluator& k, double p, Radius x);
/// p = 2 only: (sum a_n^2 x^{2n})^{1/2}.
double circle_mean_parseval(const KernelEvaluator& k, Radius x);

/// Comparison integral int_0^x dt / (omega_hat(t)^p (1-t)^p).
double mean_comparison(const RadialWeight& omega, double p, Radius x);

struct MeanTableOptions {
  int exact_levels = 14;   ///< exact means up to x = 1 - 2^-exact_levels
  int max_level = 30;      ///< table reaches x = 1 - 2^-max_level
  int inner_points = 64;   ///< uniform panels on [0, 1/2]
  int points_per_level = 8;
  unsigned jobs = 0;
};

/// phi_p(x) tabulated on [0, 1 - 2^-max_level]. Exact circle means up to the
/// exact level; beyond it phi_p^p is continued proportionally to the
/// comparison integral and the values are flagged as extrapolated.
class MeanTable {
 public:
  MeanTable(const KernelEvaluator& k, double p, const MeanTableOptions& options = {});

  double p() const { return p_; }
  double value(Radius x) const;
  double value(double x) const { return value(Radius::from_r(x)); }
  bool covers(Radius x) const;
  bool extrapolated(Radius x) const;
  Radius exact_limit() const { return Radius::knot(exact_level_); }
  Radius limit() const { return Radius::knot(max_level_); }

 private:
  double p_;
  int exact_level_;
  int max_level_;
  double inner_step_;
  double level_step_;
  std::vector<double> inner_;  ///< phi on [0, 1/2]
  std::vector<double> outer_;  ///< log phi against -log2(1-x), from level 1
};

/// ||B_a||_{A^p_nu} = (2 int_0^1 phi_p(a s)^p nu(s) s ds)^{1/p}.
double kernel_norm(const KernelEvaluator& k, const RadialWeight& nu, double p,
                   Radius a);
double kernel_norm(const KernelEvaluator& k, const RadialWeight& nu, double p,
                   Radius a, const MeanTable& table);

struct RatioRow {
  double radius = 0.0;
  double mean_p = 0.0;             ///< phi_p(radius^2)^p
  double mean_comparison = 0.0;
  double mean_ratio = 0.0;
  double norm_p = 0.0;             ///< ||B_radius||^p
  double norm_comparison = 0.0;    ///< int_0^radius nu_hat / (omega_hat^p (1-t)^p)
  double norm_ratio = 0.0;
};

struct RatioSweep {
  std::vector<RatioRow> rows;
  double mean_spread = 0.0;  ///< max/min of mean_ratio
  double norm_spread = 0.0;
};

/// Ratios of computed means and norms to their comparison integrals.
/// Radii must lie in [0.5, 1 - 2^-25].
RatioSweep theorem_a_ratio_sweep(const KernelEvaluator& k, const RadialWeight& nu,
                                 double p, const std::vector<double>& radii);

}  // namespace bergman

#pragma once
//
// Characterizing quantities of the two-weight problem for the maximal
// Bergman projection: the sup-of-products constant M_p, the tail-form
// constant N_p, the hypothesis ratio, the p = 1 quantity, J_omega and the
// test-function lower bound.
//

#include <functional>
#include <string>
#include <vector>

#include "bergman/radial_weights.hpp"

namespace bergman {

/// (omega, nu, eta, p). p = 1 is admitted for the p = 1 path only.
struct TripleConfig {
  TripleConfig(RadialWeight omega, RadialWeight nu, RadialWeight eta, double p);

  RadialWeight omega, nu, eta;
  double p;
  /// p' = p/(p-1); infinite for p = 1.
  double conjugate() const;
};

enum class Verdict { finite, diverging, inconclusive };
std::string to_string(Verdict v);

struct VerdictRule {
  int window = 5;           ///< trailing dyadic levels
  double growth = 2.0;      ///< total factor that marks divergence
  double plateau = 0.01;    ///< last-level relative change that marks a limit
};

/// Verdict on values v_k at the knots 1 - 2^-k, k = 0..L, with probe values
/// at the deeper levels 2L, 4L, 8L. Diverging if v increases strictly over the
/// last `window` levels by more than `growth`, or if v_L < v_2L < v_4L < v_8L
/// with v_8L > growth * v_L; finite if |v_L - v_{L-1}| < plateau * v_L.
Verdict growth_verdict(const std::vector<double>& values,
                       const std::vector<double>& probes,
                       const VerdictRule& rule = {});

/// Levels of the probe points for a grid of depth L.
std::vector<int> probe_levels(int levels);

struct ConstantTrace {
  std::string quantity;          ///< "Mp", "Np", "hypothesis", "p1"
  std::string measure;           ///< which measure the integrals carry
  std::vector<double> r;         ///< knots 1 - 2^-k, k = 0..L
  std::vector<double> gap;       ///< 2^-k
  std::vector<double> phi;       ///< int_0^r eta / omega_hat^p
  std::vector<double> psi;       ///< int_r^1 (omega / nu^{1/p})^{p'}
  std::vector<double> m;         ///< phi^{1/p} psi^{1/p'}
  std::vector<double> n;         ///< eta_hat^{1/p} psi^{1/p'} / omega_hat
  std::vector<double> hyp;       ///< phi omega_hat^p / eta_hat
  std::vector<double> values;    ///< the quantity whose sup is reported
  std::vector<int> probe_levels;
  std::vector<double> probe_values;
  double sup = 0.0;
  double argsup = 0.0;
  double argsup_gap = 1.0;
  Verdict verdict = Verdict::inconclusive;
  double tolerance = 0.0;        ///< achieved relative quadrature tolerance
  bool empty() const { return values.empty(); }
};

/// J_omega(s) = int_0^s dt / (omega_hat(t)(1-t)), s in [0, 1 - 2^-25).
double j_omega(const RadialWeight& omega, double s);

ConstantTrace mp_constant(const TripleConfig& cfg, const RadialGrid& grid);
ConstantTrace np_constant(const TripleConfig& cfg, const RadialGrid& grid);
/// sup of phi(r) omega_hat(r)^p / eta_hat(r); the hypothesis holds when the
/// verdict is finite.
ConstantTrace hypothesis_ratio(const TripleConfig& cfg, const RadialGrid& grid);
/// p = 1: sup of (omega(r)/nu(r)) int_0^1 eta(t) / omega_hat(t r) dt.
ConstantTrace p1_constant(const TripleConfig& cfg, const RadialGrid& grid);

struct LowerBoundTrace {
  std::vector<double> t;      ///< knots
  std::vector<double> values; ///< LB(t), with s ds measure in both integrals
  double sup = 0.0;
  double argsup = 0.0;
};

/// LB(t) = (int_0^t eta (J_omega + 1)^p r dr)^{1/p}
///         (int_t^1 (omega/nu^{1/p})^{p'} s ds)^{1/p'} on the knots.
LowerBoundTrace necessity_lower_bound(const TripleConfig& cfg,
                                      const RadialGrid& grid);
/// LB at a single t.
double necessity_lower_bound_at(const TripleConfig& cfg, double t);

/// f_{n,t} = min{n, (omega/nu)^{1/(p-1)}} on [t,1), 0 below t, sampled at
/// the grid nodes.
std::vector<double> test_function(const TripleConfig& cfg, double n, double t,
                                  const RadialGrid& grid);
/// Same function at one radius.
double test_function_value(const TripleConfig& cfg, double n, double t,
                           Radius x);

/// Log-domain cumulative integrals of exp(g) at the knots 1 - 2^-k,
/// k = 0..levels. The suffix includes the part beyond the last knot.
struct LogCumulative {
  std::vector<double> log_prefix;
  std::vector<double> log_suffix;  ///< empty unless requested
  double tolerance = 0.0;
};
LogCumulative log_cumulative(const std::function<double(Radius)>& log_integrand,
                             int levels, bool prefix, bool suffix);

}  // namespace bergman

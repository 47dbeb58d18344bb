#pragma once
//
// Radial weights on the unit disc: pointwise densities, tails
// omega_hat(r) = int_r^1 omega(s) ds, moments omega_x = int_0^1 s^x omega(s) ds,
// and numeric weight-class verdicts.
//

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bergman/quadrature.hpp"

namespace bergman {

enum class WeightFamily {
  standard,            ///< (1+alpha)(1-r^2)^alpha
  power_log,           ///< (1-r)^alpha (log e/(1-r))^beta
  exponential,         ///< exp(-c/(1-r)^kappa)
  inverse_log,         ///< (1-r)^{-1} (log e/(1-r))^{-2}
  counterexample_nu,   ///< w w_hat^{p-1} (log e/(1-r))^{2(p-1)}
  counterexample_eta,  ///< w w_hat^{p-1} (log e/(1-r))^{e(r)(p-1)}
  tabulated            ///< piecewise-linear samples
};

/// Exponent variant of the counterexample eta weight: the radius itself
/// (as printed) or the constant 1.
enum class EtaExponent { literal, constant };

namespace detail {
class WeightModel;
struct MomentCache;
}  // namespace detail

/// Immutable radial weight. Copies share the model and the moment cache.
class RadialWeight {
 public:
  static RadialWeight standard(double alpha);
  static RadialWeight power_log(double alpha, double beta);
  static RadialWeight exponential(double c, double kappa);
  static RadialWeight inverse_log();
  static RadialWeight counterexample_nu(const RadialWeight& base, double p);
  static RadialWeight counterexample_eta(
      const RadialWeight& base, double p,
      EtaExponent exponent = EtaExponent::literal);
  static RadialWeight tabulated(std::vector<double> radii,
                                std::vector<double> values);
  /// CSV rows "r,omega(r)" with strictly increasing r in [0,1).
  static RadialWeight from_csv(const std::filesystem::path& path);

  WeightFamily family() const;
  /// Canonical mini-language spec of this weight.
  std::string spec() const;

  double density(Radius x) const;
  double density(double r) const { return density(Radius::from_r(r)); }
  /// log omega; -inf where the density vanishes.
  double log_density(Radius x) const;

  /// Tail omega_hat. Uses the closed form when the family has one.
  double tail(Radius x) const;
  double tail(double r) const { return tail(Radius::from_r(r)); }
  /// log omega_hat, finite even where omega_hat underflows a double.
  double log_tail(Radius x) const;
  bool has_closed_form_tail() const;
  /// Tail computed by quadrature regardless of any closed form.
  double quadrature_tail(Radius x) const;
  double quadrature_tail(double r) const {
    return quadrature_tail(Radius::from_r(r));
  }

  /// omega_x, relative accuracy ~1e-12; cached per x.
  double moment(double x) const;
  double log_moment(double x) const;

  /// Radii where the density is not smooth (tabulated nodes).
  std::span<const double> breakpoints() const;

  friend bool operator==(const RadialWeight& a, const RadialWeight& b) {
    return a.model_ == b.model_;
  }

 private:
  explicit RadialWeight(std::shared_ptr<const detail::WeightModel> model);

  std::shared_ptr<const detail::WeightModel> model_;
  std::shared_ptr<detail::MomentCache> cache_;
};

/// omega(r), with domain checks.
double eval_weight(const RadialWeight& w, double r);

/// Parses the weight mini-language:
///   std:alpha=1   powlog:alpha=0.5,beta=1   exp:c=1,kappa=1   invlog:
///   cex-nu:base=<spec>,p=<p>   cex-eta:base=<spec>,p=<p>[,exponent=constant]
///   file:<path>
/// Throws DomainError with a diagnostic on malformed input.
RadialWeight parse_weight(const std::string& spec);

struct ClassifyOptions {
  double doubling_cap = 1e6;   ///< cap on omega_hat(r)/omega_hat((1+r)/2)
  double lower_margin = 0.05;  ///< Dcheck needs ratios >= 1 + margin
  double regular_ratio_cap = 100.0;
  double drift_factor = 1.1;   ///< monotone drift over the window that voids a verdict
  int window = 5;              ///< trailing dyadic levels inspected for drift
};

struct DoublingVerdict {
  bool holds = false;
  double constant = 0.0;  ///< sup of omega_hat(r)/omega_hat((1+r)/2)
  double beta = 0.0;      ///< largest local log2-slope of omega_hat
  bool drifting = false;
};

struct LowerDoublingVerdict {
  bool holds = false;
  int K = 0;              ///< smallest K in {2,4,8,16} that works (0 if none)
  double constant = 0.0;  ///< inf of omega_hat(r)/omega_hat(1-(1-r)/K)
  double gamma = 0.0;     ///< smallest local log2-slope of omega_hat
};

struct RegularityVerdict {
  bool holds = false;
  double min_ratio = 0.0;  ///< of omega(r)(1-r)/omega_hat(r) over the knots
  double max_ratio = 0.0;
  bool drifting = false;
};

struct WeightClassReport {
  DoublingVerdict in_Dhat;
  LowerDoublingVerdict in_Dcheck;
  RegularityVerdict regular;
  double loglog_slope = 0.0;  ///< least-squares slope of log omega_hat vs log(1-r)
  int grid_levels = 0;
  int grid_nodes = 0;
  bool grid_limited = true;  ///< verdicts are finite-grid proxies
  std::string caveat;
};

WeightClassReport classify(const RadialWeight& w, const RadialGrid& grid,
                           const ClassifyOptions& options = {});

}  // namespace bergman

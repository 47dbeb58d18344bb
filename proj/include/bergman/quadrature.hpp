#pragma once
//
// Deterministic panel quadrature on [0,1) with dyadic refinement toward the
// endpoint 1. Points are carried as (r, 1-r) pairs so that radii extremely
// close to 1 keep full relative precision in their distance to the boundary.
//

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bergman {

/// A radius in [0,1) together with its gap 1-r.
struct Radius {
  double r = 0.0;
  double gap = 1.0;

  static Radius from_r(double r) { return {r, 1.0 - r}; }
  static Radius from_gap(double g) { return {1.0 - g, g}; }
  /// The dyadic knot 1 - 2^{-level}.
  static Radius knot(int level);
};

/// Product of two radii; the gap 1 - ab = ga + gb - ga*gb is formed without
/// cancellation.
Radius product(Radius a, Radius b);

using RadialIntegrand = std::function<double(Radius)>;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Gauss-Legendre rule on [-1,1], nodes computed by Newton iteration.
class GaussLegendre {
 public:
  explicit GaussLegendre(int n);

  int size() const { return static_cast<int>(nodes_.size()); }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

  /// Integrates f over the panel [a,b]. Near 1 the nodes are placed from the
  /// gap side so that both endpoints of a tiny panel stay exact.
  double integrate(const RadialIntegrand& f, Radius a, Radius b) const;

  /// Maps a reference node t in [-1,1] to the panel [a,b].
  static Radius map(Radius a, Radius b, double t);

  /// Shared rule of the given order (cached, thread safe).
  static const GaussLegendre& of_order(int n);

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

struct QuadratureOptions {
  double tolerance = 1e-12;     ///< relative
  int gauss_order = 16;
  int max_depth = 40;           ///< bisection depth per panel
  long max_evaluations = 8'000'000;
  int max_levels = 300;         ///< deepest dyadic level 2^{-level} reached toward 1
  double accept_extrapolated = 1e-2;  ///< largest achieved tolerance still returned
};

struct QuadratureResult {
  double value = 0.0;
  double achieved_tolerance = 0.0;
  bool extrapolated = false;  ///< remainder toward 1 filled in by a decay fit
  long evaluations = 0;
};

/// Integral of f over [a,b] (b may be the endpoint 1, i.e. b.gap == 0).
/// The interval is split at every dyadic knot it contains; each panel is
/// bisected until two successive refinements agree to the tolerance.
/// Summation order is fixed: ascending panel, then ascending sub-panel.
/// Throws NumericError when the evaluation budget runs out.
QuadratureResult integrate(const RadialIntegrand& f, Radius a, Radius b,
                           const QuadratureOptions& options = {},
                           std::span<const double> breakpoints = {});

/// Convenience overload on plain radii; b == 1 integrates up to the endpoint.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tolerance = 1e-12);

/// Integral of f over [a,1). Dyadic panels [1-g, 1-g/2] are summed until the
/// contributions decay geometrically; the geometric remainder is added. If
/// the decay is slower (log-type integrands), the remainder past the deepest
/// level is fitted with a power law in the level index and flagged.
QuadratureResult integrate_to_one(const RadialIntegrand& f, Radius a,
                                  const QuadratureOptions& options = {},
                                  std::span<const double> breakpoints = {});

/// Dyadic panel grid [1-2^{-l}, 1-2^{-l-1}], l = 0..L-1, n Gauss nodes each.
class RadialGrid {
 public:
  RadialGrid(int levels = 24, int nodes_per_panel = 16);

  int levels() const { return levels_; }
  int nodes_per_panel() const { return nodes_per_panel_; }
  std::size_t size() const { return nodes_.size(); }

  std::span<const Radius> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  /// Panel boundaries 1 - 2^{-k}, k = 0..L.
  std::span<const Radius> knots() const { return knots_; }
  Radius cut() const { return knots_.back(); }
  int panel_of(std::size_t node) const {
    return static_cast<int>(node) / nodes_per_panel_;
  }

 private:
  int levels_;
  int nodes_per_panel_;
  std::vector<Radius> nodes_;
  std::vector<double> weights_;
  std::vector<Radius> knots_;
};

/// Prefix r -> int_0^r f and suffix r -> int_r^1 f of a nonnegative
/// integrand, tabulated at the dyadic knots 0..levels. The part of the suffix
/// beyond the deepest knot is computed separately and reported. With
/// with_suffix = false only prefixes are formed, so f need not be integrable
/// up to 1.
class CumulativeTable {
 public:
  CumulativeTable(RadialIntegrand f, int levels,
                  const QuadratureOptions& options = {},
                  bool with_suffix = true);

  int levels() const { return static_cast<int>(prefix_.size()) - 1; }
  std::span<const double> prefix() const { return prefix_; }
  std::span<const double> suffix() const { return suffix_; }
  std::span<const Radius> knots() const { return knots_; }

  /// Prefix / suffix at an arbitrary radius (partial panel integrated on
  /// demand).
  double prefix_at(Radius x) const;
  double suffix_at(Radius x) const;

  double total() const { return prefix_.back() + suffix_.back(); }
  const QuadratureResult& remainder() const { return remainder_; }
  double achieved_tolerance() const { return achieved_tolerance_; }

 private:
  RadialIntegrand f_;
  QuadratureOptions options_;
  bool with_suffix_ = true;
  std::vector<Radius> knots_;
  std::vector<double> prefix_;
  std::vector<double> suffix_;
  QuadratureResult remainder_;
  double achieved_tolerance_ = 0.0;
};

/// Cumulative tables of f on the knots of a grid.
CumulativeTable cumulative_tables(const RadialIntegrand& f,
                                  const RadialGrid& grid,
                                  const QuadratureOptions& options = {});

}  // namespace bergman

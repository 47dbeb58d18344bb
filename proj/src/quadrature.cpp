#include "bergman/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "bergman/errors.hpp"

namespace bergman {

Radius Radius::knot(int level) {
  const double g = std::ldexp(1.0, -level);
  return {1.0 - g, g};
}

Radius product(Radius a, Radius b) {
  if (a.r == 0.0 || b.r == 0.0) return {0.0, 1.0};
  return {a.r * b.r, std::min(1.0, a.gap + a.r * b.gap)};
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre
// ---------------------------------------------------------------------------

GaussLegendre::GaussLegendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre order must be positive");
  nodes_.resize(n);
  weights_.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes_[i] = -x;
    nodes_[n - 1 - i] = x;
    weights_[i] = w;
    weights_[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes_[n / 2] = 0.0;
}

const GaussLegendre& GaussLegendre::of_order(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendre>> rules;
  std::lock_guard lock(mutex);
  auto& slot = rules[n];
  if (!slot) slot = std::make_unique<GaussLegendre>(n);
  return *slot;
}

namespace {

bool gap_side(Radius b) { return b.gap < 0.5; }

double panel_length(Radius a, Radius b) {
  return gap_side(b) ? a.gap - b.gap : b.r - a.r;
}

Radius midpoint(Radius a, Radius b) {
  if (gap_side(b)) return Radius::from_gap(0.5 * (a.gap + b.gap));
  return Radius::from_r(0.5 * (a.r + b.r));
}

}  // namespace

Radius GaussLegendre::map(Radius a, Radius b, double t) {
  if (gap_side(b)) {
    const double half = 0.5 * (a.gap - b.gap);
    return Radius::from_gap(b.gap + half * (1.0 - t));
  }
  const double half = 0.5 * (b.r - a.r);
  return Radius::from_r(a.r + half * (1.0 + t));
}

double GaussLegendre::integrate(const RadialIntegrand& f, Radius a,
                                Radius b) const {
  const double half = 0.5 * panel_length(a, b);
  CompensatedSum sum;
  for (int i = 0; i < size(); ++i) {
    sum.add(weights_[i] * f(map(a, b, nodes_[i])));
  }
  return half * sum.value();
}

// ---------------------------------------------------------------------------
// adaptive panels
// ---------------------------------------------------------------------------

namespace {

struct AdaptiveContext {
  const RadialIntegrand& f;
  const GaussLegendre& rule;
  const QuadratureOptions& options;
  long evaluations = 0;
  double error = 0.0;
  bool exhausted = false;

  double gauss(Radius a, Radius b) {
    evaluations += rule.size();
    if (evaluations > options.max_evaluations) exhausted = true;
    return rule.integrate(f, a, b);
  }
};

double adapt(AdaptiveContext& ctx, Radius a, Radius b, double whole,
             double abs_tol, int depth) {
  const Radius m = midpoint(a, b);
  const double left = ctx.gauss(a, m);
  const double right = ctx.gauss(m, b);
  const double halves = left + right;
  const double err = std::abs(whole - halves);
  if (!std::isfinite(halves)) {
    throw NumericError("non-finite integrand value in panel quadrature",
                       halves, INFINITY);
  }
  if (err <= std::max(ctx.options.tolerance * std::abs(halves), abs_tol) ||
      depth >= ctx.options.max_depth || ctx.exhausted) {
    ctx.error += err;
    return halves;
  }
  return adapt(ctx, a, m, left, 0.5 * abs_tol, depth + 1) +
         adapt(ctx, m, b, right, 0.5 * abs_tol, depth + 1);
}

double adaptive_panel(AdaptiveContext& ctx, Radius a, Radius b,
                      double abs_tol) {
  if (panel_length(a, b) <= 0.0) return 0.0;
  return adapt(ctx, a, b, ctx.gauss(a, b), abs_tol, 0);
}

// Split points of [a,b]: dyadic knots and breakpoints strictly inside.
std::vector<Radius> split_points(Radius a, Radius b,
                                 std::span<const double> breakpoints) {
  std::vector<Radius> pts{a, b};
  for (int k = 1; k < 1100; ++k) {
    const double g = std::ldexp(1.0, -k);
    if (g <= b.gap) break;
    if (g < a.gap) pts.push_back(Radius::knot(k));
  }
  for (double x : breakpoints) {
    if (x > a.r && x < b.r && (1.0 - x) > b.gap && (1.0 - x) < a.gap) {
      pts.push_back(Radius::from_r(x));
    }
  }
  std::sort(pts.begin(), pts.end(),
            [](Radius x, Radius y) { return x.gap > y.gap; });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](Radius x, Radius y) { return x.gap == y.gap; }),
            pts.end());
  return pts;
}

}  // namespace

QuadratureResult integrate(const RadialIntegrand& f, Radius a, Radius b,
                           const QuadratureOptions& options,
                           std::span<const double> breakpoints) {
  if (b.gap == 0.0) return integrate_to_one(f, a, options, breakpoints);
  if (a.gap < b.gap) throw DomainError("integrate: requires a <= b");
  if (a.gap == b.gap) return {};

  AdaptiveContext ctx{f, GaussLegendre::of_order(options.gauss_order),
                      options};
  const auto pts = split_points(a, b, breakpoints);
  std::vector<double> coarse(pts.size() - 1);
  double scale = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    coarse[i] = ctx.gauss(pts[i], pts[i + 1]);
    scale += std::abs(coarse[i]);
  }
  const double abs_tol =
      options.tolerance * scale / static_cast<double>(coarse.size());
  CompensatedSum sum;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    sum.add(adapt(ctx, pts[i], pts[i + 1], coarse[i], abs_tol, 0));
  }
  QuadratureResult result;
  result.value = sum.value();
  result.evaluations = ctx.evaluations;
  result.achieved_tolerance =
      result.value != 0.0 ? ctx.error / std::abs(result.value) : ctx.error;
  if (ctx.exhausted) {
    throw NumericError("integrate: evaluation budget exhausted", result.value,
                       result.achieved_tolerance);
  }
  return result;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tolerance) {
  QuadratureOptions options;
  options.tolerance = tolerance;
  const Radius lo = Radius::from_r(a);
  if (b >= 1.0) {
    // f sees only r, so 1 - r loses relative precision as r nears 1; stop
    // at 2^-30 and fit the remainder.
    options.max_levels = 30;
    return integrate_to_one([&f](Radius x) { return f(x.r); }, lo, options).value;
  }
  return integrate([&f](Radius x) { return f(x.r); }, lo, Radius::from_r(b),
                   options).value;
}

QuadratureResult integrate_to_one(const RadialIntegrand& f, Radius a,
                                  const QuadratureOptions& options,
                                  std::span<const double> breakpoints) {
  QuadratureResult result;
  if (a.gap <= 0.0) return result;

  AdaptiveContext ctx{f, GaussLegendre::of_order(options.gauss_order),
                      options};
  CompensatedSum sum;
  std::vector<double> contributions;
  std::vector<double> levels;  // -log2 of the panel's outer gap
  int zero_run = 0;

  // Coarse pass over the first dyadic panels: an absolute scale for the
  // refinement of panels that precede the bulk of the integral.
  double scale = 0.0;
  {
    double g = a.gap;
    Radius outer = a;
    for (int l = 0; l < 64 && g > 0.0; ++l) {
      const Radius inner = Radius::from_gap(0.5 * g);
      const double c = ctx.gauss(outer, inner);
      if (std::isfinite(c)) scale += std::abs(c);
      g *= 0.5;
      outer = inner;
    }
  }

  double g = a.gap;
  Radius outer = a;
  while (true) {
    const Radius inner = Radius::from_gap(0.5 * g);
    double c = 0.0;
    const double abs_tol =
        0.1 * options.tolerance * std::max(std::abs(sum.value()), scale);
    if (breakpoints.empty()) {
      c = adaptive_panel(ctx, outer, inner, abs_tol);
    } else {
      const auto pts = split_points(outer, inner, breakpoints);
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        c += adaptive_panel(ctx, pts[i], pts[i + 1], abs_tol);
      }
    }
    if (!std::isfinite(c)) {
      throw NumericError("integrate_to_one: non-finite panel contribution",
                         sum.value(), INFINITY);
    }
    if (ctx.exhausted) {
      throw NumericError("integrate_to_one: evaluation budget exhausted",
                         sum.value(), INFINITY);
    }
    sum.add(c);
    contributions.push_back(c);
    levels.push_back(-std::log2(g));
    zero_run = (c == 0.0) ? zero_run + 1 : 0;

    const double total = sum.value();
    const std::size_t k = contributions.size();
    if (zero_run >= 3 && (total != 0.0 || k > 64)) {
      // Integrand vanishes (or underflows) toward the endpoint.
      result.value = total;
      break;
    }
    if (k >= 4 && total != 0.0 && c != 0.0) {
      double rho = 0.0;
      bool decaying = true;
      for (std::size_t i = k - 3; i < k; ++i) {
        if (contributions[i - 1] == 0.0) {
          decaying = false;
          break;
        }
        rho = std::max(rho,
                       std::abs(contributions[i] / contributions[i - 1]));
      }
      if (decaying && rho < 0.97) {
        const double remainder = c * rho / (1.0 - rho);
        const bool at_limit = levels.back() + 1.0 >= options.max_levels;
        if (at_limit) result.extrapolated = true;
        if (at_limit || std::abs(remainder) <= options.tolerance * std::abs(total)) {
          result.value = total + remainder;
          result.achieved_tolerance =
              (std::abs(remainder) + ctx.error) / std::abs(result.value);
          break;
        }
      }
    }
    if (levels.back() + 1.0 >= options.max_levels) {
      // Slow (sub-geometric) decay: fit c_j ~ C (j+s)^{-q} in the level index
      // through three panels, then sum the fitted law past the last panel.
      const std::size_t last = k - 1;
      auto at_fraction = [&](double frac) {
        const double target = levels[0] + frac * (levels[last] - levels[0]);
        std::size_t best = 0;
        for (std::size_t i = 0; i < k; ++i) {
          if (std::abs(levels[i] - target) < std::abs(levels[best] - target))
            best = i;
        }
        return best;
      };
      const double jl = levels[last];
      auto remainder_from = [&](std::size_t ia, std::size_t ib) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double ja = levels[ia], jb = levels[ib];
        const double ca = contributions[ia], cb = contributions[ib];
        if (!(ca > 0.0 && cb > 0.0 && c > 0.0) || !(ja < jb && jb < jl)) {
          return nan;
        }
        const double ratio = std::log(ca / c) / std::log(cb / c);
        auto h = [&](double sh) {
          return std::log((jl + sh) / (ja + sh)) / std::log((jl + sh) / (jb + sh));
        };
        double lo = -ja + 1e-9 * (1.0 + std::abs(ja)), hi = 1e7;
        double sh = 0.0;
        if (h(hi) < ratio && ratio < h(lo)) {
          for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (h(mid) > ratio ? lo : hi) = mid;
          }
          sh = 0.5 * (lo + hi);
        }
        const double q = std::log(cb / c) / std::log((jl + sh) / (jb + sh));
        if (!(q > 1.05)) return nan;
        return c * std::pow(jl + sh, q) * std::pow(jl + 0.5 + sh, 1.0 - q) /
               (q - 1.0);
      };
      const double rem = remainder_from(at_fraction(0.25), at_fraction(0.5));
      double rem_alt = remainder_from(at_fraction(0.5), at_fraction(0.75));
      if (!std::isfinite(rem)) {
        throw NumericError(
            "integrate_to_one: contributions do not decay fast enough to "
            "extrapolate the remainder",
            total, INFINITY);
      }
      if (!std::isfinite(rem_alt)) rem_alt = 2.0 * rem;
      result.value = total + rem;
      result.extrapolated = true;
      result.achieved_tolerance =
          (std::abs(rem - rem_alt) + ctx.error) / std::abs(result.value);
      if (result.achieved_tolerance > options.accept_extrapolated) {
        std::ostringstream msg;
        msg << "integrate_to_one: remainder extrapolation too uncertain ("
            << result.achieved_tolerance << ")";
        throw NumericError(msg.str(), result.value, result.achieved_tolerance);
      }
      break;
    }
    g *= 0.5;
    outer = inner;
  }
  result.evaluations = ctx.evaluations;
  if (result.achieved_tolerance == 0.0 && result.value != 0.0) {
    result.achieved_tolerance = ctx.error / std::abs(result.value);
  }
  return result;
}

// ---------------------------------------------------------------------------
// RadialGrid
// ---------------------------------------------------------------------------

RadialGrid::RadialGrid(int levels, int nodes_per_panel)
    : levels_(levels), nodes_per_panel_(nodes_per_panel) {
  if (levels < 1 || levels > 1000) {
    throw DomainError("RadialGrid: levels must lie in [1, 1000]");
  }
  if (nodes_per_panel < 1) {
    throw DomainError("RadialGrid: nodes per panel must be positive");
  }
  const auto& rule = GaussLegendre::of_order(nodes_per_panel);
  knots_.reserve(levels + 1);
  for (int k = 0; k <= levels; ++k) knots_.push_back(Radius::knot(k));
  nodes_.reserve(static_cast<std::size_t>(levels) * nodes_per_panel);
  weights_.reserve(nodes_.capacity());
  for (int l = 0; l < levels; ++l) {
    const Radius a = knots_[l];
    const Radius b = knots_[l + 1];
    const double half = 0.5 * panel_length(a, b);
    for (int i = 0; i < nodes_per_panel; ++i) {
      nodes_.push_back(GaussLegendre::map(a, b, rule.nodes()[i]));
      weights_.push_back(half * rule.weights()[i]);
    }
  }
}

// ---------------------------------------------------------------------------
// CumulativeTable
// ---------------------------------------------------------------------------

namespace {

int knot_below(Radius x, int levels) {
  if (x.gap >= 1.0) return 0;
  int e = 0;
  const double m = std::frexp(x.gap, &e);
  const int k = (m == 0.5) ? 1 - e : -e;
  return std::clamp(k, 0, levels);
}

}  // namespace

CumulativeTable::CumulativeTable(RadialIntegrand f, int levels,
                                 const QuadratureOptions& options,
                                 bool with_suffix)
    : options_(options), with_suffix_(with_suffix) {
  f_ = [g = std::move(f)](Radius x) {
    const double v = g(x);
    if (!(v >= 0.0)) {
      std::ostringstream msg;
      msg << "cumulative table: integrand negative or undefined at r = "
          << x.r << " (1-r = " << x.gap << "): " << v;
      throw DomainError(msg.str());
    }
    return v;
  };
  knots_.reserve(levels + 1);
  for (int k = 0; k <= levels; ++k) knots_.push_back(Radius::knot(k));
  std::vector<double> panels(levels);
  double err = 0.0;
  for (int k = 0; k < levels; ++k) {
    const auto res = integrate(f_, knots_[k], knots_[k + 1], options_);
    panels[k] = res.value;
    err += res.achieved_tolerance * res.value;
  }
  if (with_suffix_) {
    remainder_ = integrate_to_one(f_, knots_[levels], options_);
    err += remainder_.achieved_tolerance * remainder_.value;
  }

  prefix_.assign(levels + 1, 0.0);
  suffix_.assign(levels + 1, 0.0);
  CompensatedSum up;
  for (int k = 0; k < levels; ++k) {
    up.add(panels[k]);
    prefix_[k + 1] = up.value();
  }
  CompensatedSum down;
  down.add(remainder_.value);
  suffix_[levels] = down.value();
  for (int k = levels - 1; k >= 0; --k) {
    down.add(panels[k]);
    suffix_[k] = down.value();
  }
  if (!with_suffix_) {
    suffix_.assign(levels + 1, std::numeric_limits<double>::quiet_NaN());
  }
  const double tot = with_suffix_ ? total() : prefix_.back();
  achieved_tolerance_ = tot > 0.0 ? err / tot : 0.0;
}

double CumulativeTable::prefix_at(Radius x) const {
  const int k = knot_below(x, levels());
  if (x.gap == knots_[k].gap) return prefix_[k];
  return prefix_[k] + integrate(f_, knots_[k], x, options_).value;
}

double CumulativeTable::suffix_at(Radius x) const {
  if (!with_suffix_) throw DomainError("cumulative table built without suffix");
  const int k = knot_below(x, levels());
  if (x.gap == knots_[k].gap) return suffix_[k];
  if (k >= levels()) return integrate_to_one(f_, x, options_).value;
  return integrate(f_, x, knots_[k + 1], options_).value + suffix_[k + 1];
}

CumulativeTable cumulative_tables(const RadialIntegrand& f,
                                  const RadialGrid& grid,
                                  const QuadratureOptions& options) {
  return CumulativeTable(f, grid.levels(), options);
}

}  // namespace bergman

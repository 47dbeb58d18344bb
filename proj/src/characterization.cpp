#include "bergman/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/parallel.hpp"

namespace bergman {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

QuadratureOptions precise(int deepest_level) {
  QuadratureOptions opt;
  opt.tolerance = 1e-12;
  opt.max_levels = std::max(opt.max_levels, deepest_level + 100);
  return opt;
}

void require_p_above_one(const TripleConfig& cfg, const char* what) {
  if (!(cfg.p > 1.0)) {
    throw DomainError(std::string(what) + " needs 1 < p < infinity");
  }
}

// log of (omega/nu^{1/p})^{p'}; vanishing nu where omega > 0 is an error.
double log_psi_integrand(const TripleConfig& cfg, Radius x) {
  const double lw = cfg.omega.log_density(x);
  if (lw == kNegInf) return kNegInf;
  const double lv = cfg.nu.log_density(x);
  if (lv == kNegInf) {
    std::ostringstream msg;
    msg << "nu vanishes at r = " << x.r << " where omega > 0";
    throw DomainError(msg.str());
  }
  const double q = cfg.conjugate();
  return q * (lw - lv / cfg.p);
}

void check_nu_on_grid(const TripleConfig& cfg, const RadialGrid& grid) {
  for (const Radius& x : grid.nodes()) (void)log_psi_integrand(cfg, x);
  for (const Radius& x : grid.knots()) (void)log_psi_integrand(cfg, x);
}

std::vector<Radius> trace_points(int levels) {
  std::vector<Radius> pts;
  for (int k = 0; k <= levels; ++k) pts.push_back(Radius::knot(k));
  for (int l : probe_levels(levels)) pts.push_back(Radius::knot(l));
  return pts;
}

void finish(ConstantTrace& t, int levels) {
  t.sup = 0.0;
  for (std::size_t k = 0; k < t.values.size(); ++k) {
    if (t.values[k] > t.sup || k == 0) {
      t.sup = t.values[k];
      t.argsup = t.r[k];
      t.argsup_gap = t.gap[k];
    }
  }
  t.probe_levels = probe_levels(levels);
  t.verdict = growth_verdict(t.values, t.probe_values);
}

// Phi, Psi, omega_hat, eta_hat on the knots and probe levels; fills all
// per-radius columns of the trace and returns the probe columns.
struct ProbeColumns {
  std::vector<double> m, n, hyp;
};

ProbeColumns build_trace(const TripleConfig& cfg, const RadialGrid& grid,
                         ConstantTrace& t) {
  require_p_above_one(cfg, "the sup-of-products constants");
  check_nu_on_grid(cfg, grid);
  const int L = grid.levels();
  const int deep = probe_levels(L).back();
  const double p = cfg.p, q = cfg.conjugate();

  const auto phi = log_cumulative(
      [&](Radius x) {
        const double le = cfg.eta.log_density(x);
        return le == kNegInf ? kNegInf : le - p * cfg.omega.log_tail(x);
      },
      deep, true, false);
  const auto psi = log_cumulative(
      [&](Radius x) { return log_psi_integrand(cfg, x); }, deep, false, true);
  t.tolerance = std::max(phi.tolerance, psi.tolerance);

  const auto pts = trace_points(L);
  std::vector<int> idx;
  for (int k = 0; k <= L; ++k) idx.push_back(k);
  for (int l : probe_levels(L)) idx.push_back(l);

  ProbeColumns probes;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Radius x = pts[i];
    const double lphi = phi.log_prefix[idx[i]];
    const double lpsi = psi.log_suffix[idx[i]];
    const double lw = cfg.omega.log_tail(x);
    const double le = cfg.eta.log_tail(x);
    const double m = std::exp(lphi / p + lpsi / q);
    const double n = std::exp(le / p + lpsi / q - lw);
    const double hyp = std::exp(lphi + p * lw - le);
    if (static_cast<int>(i) <= L) {
      t.r.push_back(x.r);
      t.gap.push_back(x.gap);
      t.phi.push_back(std::exp(lphi));
      t.psi.push_back(std::exp(lpsi));
      t.m.push_back(m);
      t.n.push_back(n);
      t.hyp.push_back(hyp);
    } else {
      probes.m.push_back(m);
      probes.n.push_back(n);
      probes.hyp.push_back(hyp);
    }
  }
  return probes;
}

}  // namespace

TripleConfig::TripleConfig(RadialWeight omega_, RadialWeight nu_,
                           RadialWeight eta_, double p_)
    : omega(std::move(omega_)), nu(std::move(nu_)), eta(std::move(eta_)), p(p_) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw DomainError("exponent p must satisfy 1 <= p < infinity");
  }
}

double TripleConfig::conjugate() const {
  return p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::finite:
      return "finite";
    case Verdict::diverging:
      return "diverging";
    case Verdict::inconclusive:
      break;
  }
  return "inconclusive";
}

std::vector<int> probe_levels(int levels) {
  return {2 * levels, 4 * levels, 8 * levels};
}

Verdict growth_verdict(const std::vector<double>& v,
                       const std::vector<double>& probes,
                       const VerdictRule& rule) {
  const int size = static_cast<int>(v.size());
  if (size < 2) return Verdict::inconclusive;
  const double last = v.back();
  if (size >= rule.window) {
    bool increasing = true;
    for (int k = size - rule.window + 1; k < size; ++k) {
      if (!(v[k] > v[k - 1])) increasing = false;
    }
    if (increasing && last > rule.growth * v[size - rule.window]) {
      return Verdict::diverging;
    }
  }
  if (!probes.empty()) {
    bool increasing = probes.front() > last;
    for (std::size_t i = 1; i < probes.size(); ++i) {
      if (!(probes[i] > probes[i - 1])) increasing = false;
    }
    if (increasing && probes.back() > rule.growth * last) {
      return Verdict::diverging;
    }
  }
  if (std::isfinite(last) &&
      std::abs(last - v[size - 2]) < rule.plateau * std::abs(last)) {
    return Verdict::finite;
  }
  return Verdict::inconclusive;
}

LogCumulative log_cumulative(const std::function<double(Radius)>& g, int levels,
                             bool prefix, bool suffix) {
  const QuadratureOptions opt = precise(levels);
  LogCumulative out;
  std::vector<double> panel(levels, kNegInf);
  std::vector<double> tol(levels, 0.0);
  parallel_for(static_cast<std::size_t>(levels), [&](std::size_t k) {
    const Radius a = Radius::knot(static_cast<int>(k));
    const Radius b = Radius::knot(static_cast<int>(k) + 1);
    const Radius mid = Radius::from_gap(0.75 * a.gap);
    const double shift = std::max({g(a), g(mid), g(b)});
    if (shift == kNegInf) return;
    const auto res =
        integrate([&](Radius x) { return std::exp(g(x) - shift); }, a, b, opt);
    if (res.value > 0.0) panel[k] = shift + std::log(res.value);
    tol[k] = res.achieved_tolerance;
  });
  out.tolerance = *std::max_element(tol.begin(), tol.end());
  if (prefix) {
    out.log_prefix.assign(levels + 1, kNegInf);
    for (int k = 0; k < levels; ++k) {
      out.log_prefix[k + 1] = log_add(out.log_prefix[k], panel[k]);
    }
  }
  if (suffix) {
    const Radius end = Radius::knot(levels);
    double shift = g(end);
    if (shift == kNegInf) shift = g(Radius::from_gap(0.5 * end.gap));
    double rem = kNegInf;
    if (shift != kNegInf) {
      const auto res = integrate_to_one(
          [&](Radius x) { return std::exp(g(x) - shift); }, end, opt);
      if (res.value > 0.0) rem = shift + std::log(res.value);
      out.tolerance = std::max(out.tolerance, res.achieved_tolerance);
    }
    out.log_suffix.assign(levels + 1, kNegInf);
    out.log_suffix[levels] = rem;
    for (int k = levels - 1; k >= 0; --k) {
      out.log_suffix[k] = log_add(out.log_suffix[k + 1], panel[k]);
    }
  }
  return out;
}

double j_omega(const RadialWeight& omega, double s) {
  if (!(s >= 0.0 && s < 1.0 - std::ldexp(1.0, -25))) {
    throw DomainError("J_omega needs s in [0, 1 - 2^-25)");
  }
  QuadratureOptions opt;
  opt.tolerance = 1e-12;
  return integrate(
             [&](Radius t) {
               return std::exp(-omega.log_tail(t) - std::log(t.gap));
             },
             Radius{0.0, 1.0}, Radius::from_r(s), opt)
      .value;
}

ConstantTrace mp_constant(const TripleConfig& cfg, const RadialGrid& grid) {
  ConstantTrace t;
  t.quantity = "Mp";
  t.measure = "dr";
  const auto probes = build_trace(cfg, grid, t);
  t.values = t.m;
  t.probe_values = probes.m;
  finish(t, grid.levels());
  return t;
}

ConstantTrace np_constant(const TripleConfig& cfg, const RadialGrid& grid) {
  ConstantTrace t;
  t.quantity = "Np";
  t.measure = "dr";
  const auto probes = build_trace(cfg, grid, t);
  t.values = t.n;
  t.probe_values = probes.n;
  finish(t, grid.levels());
  return t;
}

ConstantTrace hypothesis_ratio(const TripleConfig& cfg, const RadialGrid& grid) {
  ConstantTrace t;
  t.quantity = "hypothesis";
  t.measure = "dr";
  const auto probes = build_trace(cfg, grid, t);
  t.values = t.hyp;
  t.probe_values = probes.hyp;
  finish(t, grid.levels());
  return t;
}

ConstantTrace p1_constant(const TripleConfig& cfg, const RadialGrid& grid) {
  if (cfg.p != 1.0) throw DomainError("the p = 1 constant needs p = 1");
  for (const Radius& x : grid.nodes()) {
    if (cfg.nu.log_density(x) == kNegInf && cfg.omega.log_density(x) != kNegInf) {
      throw DomainError("nu vanishes on the grid where omega > 0");
    }
  }
  const int L = grid.levels();
  ConstantTrace t;
  t.quantity = "p1";
  t.measure = "dt";
  const auto pts = trace_points(L);
  std::vector<double> vals(pts.size());
  std::vector<double> tols(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const Radius r = pts[i];
    QuadratureOptions opt = precise(8 * L);
    opt.tolerance = 1e-10;
    const auto inner = integrate(
        [&](Radius s) {
          const double le = cfg.eta.log_density(s);
          if (le == kNegInf) return 0.0;
          return std::exp(le - cfg.omega.log_tail(product(s, r)));
        },
        Radius{0.0, 1.0}, Radius{1.0, 0.0}, opt, cfg.eta.breakpoints());
    const double lw = cfg.omega.log_density(r);
    const double ratio = lw == kNegInf ? 0.0 : std::exp(lw - cfg.nu.log_density(r));
    vals[i] = ratio * inner.value;
    tols[i] = inner.achieved_tolerance;
  });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (static_cast<int>(i) <= L) {
      t.r.push_back(pts[i].r);
      t.gap.push_back(pts[i].gap);
      t.values.push_back(vals[i]);
    } else {
      t.probe_values.push_back(vals[i]);
    }
  }
  t.tolerance = *std::max_element(tols.begin(), tols.end());
  finish(t, L);
  return t;
}

// ---------------------------------------------------------------------------
// lower bound and test functions
// ---------------------------------------------------------------------------

namespace {

double lb_first_integrand(const TripleConfig& cfg, const CumulativeTable& j,
                          Radius x) {
  const double le = cfg.eta.log_density(x);
  if (le == kNegInf || x.r == 0.0) return 0.0;
  return std::exp(le + cfg.p * std::log(j.prefix_at(x) + 1.0) + std::log(x.r));
}

double lb_second_integrand(const TripleConfig& cfg, Radius x) {
  const double l = log_psi_integrand(cfg, x);
  if (l == kNegInf || x.r == 0.0) return 0.0;
  return std::exp(l + std::log(x.r));
}

CumulativeTable j_table(const RadialWeight& omega, int levels) {
  QuadratureOptions opt;
  opt.tolerance = 1e-12;
  return CumulativeTable(
      [&omega](Radius t) { return std::exp(-omega.log_tail(t) - std::log(t.gap)); },
      levels, opt, false);
}

}  // namespace

LowerBoundTrace necessity_lower_bound(const TripleConfig& cfg,
                                      const RadialGrid& grid) {
  require_p_above_one(cfg, "the necessity lower bound");
  check_nu_on_grid(cfg, grid);
  const int L = grid.levels();
  const CumulativeTable j = j_table(cfg.omega, L);
  QuadratureOptions opt;
  opt.tolerance = 1e-10;
  const CumulativeTable first(
      [&](Radius x) { return lb_first_integrand(cfg, j, x); }, L, opt, false);
  const CumulativeTable second(
      [&](Radius x) { return lb_second_integrand(cfg, x); }, L, opt, true);
  const double p = cfg.p, q = cfg.conjugate();
  LowerBoundTrace out;
  for (int k = 0; k <= L; ++k) {
    const double v =
        std::pow(first.prefix()[k], 1.0 / p) * std::pow(second.suffix()[k], 1.0 / q);
    out.t.push_back(first.knots()[k].r);
    out.values.push_back(v);
    if (v > out.sup) {
      out.sup = v;
      out.argsup = first.knots()[k].r;
    }
  }
  return out;
}

double necessity_lower_bound_at(const TripleConfig& cfg, double t) {
  require_p_above_one(cfg, "the necessity lower bound");
  if (!(t >= 0.0 && t < 1.0)) throw DomainError("lower bound needs t in [0,1)");
  const Radius x = Radius::from_r(t);
  const int level = std::max(1, static_cast<int>(std::ceil(-std::log2(x.gap))) + 1);
  const CumulativeTable j = j_table(cfg.omega, level);
  QuadratureOptions opt;
  opt.tolerance = 1e-12;
  const double a =
      integrate([&](Radius s) { return lb_first_integrand(cfg, j, s); },
                Radius{0.0, 1.0}, x, opt)
          .value;
  const double b =
      integrate_to_one([&](Radius s) { return lb_second_integrand(cfg, s); }, x, opt)
          .value;
  return std::pow(a, 1.0 / cfg.p) * std::pow(b, 1.0 / cfg.conjugate());
}

double test_function_value(const TripleConfig& cfg, double n, double t,
                           Radius x) {
  require_p_above_one(cfg, "test functions");
  if (!(n >= 1.0)) throw DomainError("test function needs n >= 1");
  if (!(t >= 0.0 && t < 1.0)) throw DomainError("test function needs t in [0,1)");
  if (x.r < t) return 0.0;
  const double lw = cfg.omega.log_density(x);
  if (lw == kNegInf) return 0.0;
  const double lv = cfg.nu.log_density(x);
  if (lv == kNegInf) {
    std::ostringstream msg;
    msg << "test function: nu vanishes at r = " << x.r << " where omega > 0";
    throw DomainError(msg.str());
  }
  return std::min(n, std::exp((lw - lv) / (cfg.p - 1.0)));
}

std::vector<double> test_function(const TripleConfig& cfg, double n, double t,
                                  const RadialGrid& grid) {
  std::vector<double> f;
  f.reserve(grid.size());
  for (const Radius& x : grid.nodes()) f.push_back(test_function_value(cfg, n, t, x));
  return f;
}

}  // namespace bergman

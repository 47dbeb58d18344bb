#include "bergman/bergman_kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/parallel.hpp"

namespace bergman {

namespace {

constexpr long kDirect = 512;

// 4-point Lagrange interpolation on a uniform table at fractional index u.
double cubic(const std::vector<double>& v, double u) {
  const long n = static_cast<long>(v.size());
  long i0 = static_cast<long>(std::floor(u)) - 1;
  i0 = std::clamp(i0, 0L, n - 4);
  const double s = u - static_cast<double>(i0);
  const double y0 = v[i0], y1 = v[i0 + 1], y2 = v[i0 + 2], y3 = v[i0 + 3];
  return -y0 * (s - 1) * (s - 2) * (s - 3) / 6.0 + y1 * s * (s - 2) * (s - 3) / 2.0 -
         y2 * s * (s - 1) * (s - 3) / 2.0 + y3 * s * (s - 1) * (s - 2) / 6.0;
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// mean over M equispaced angles of |sum_n c_n e^{i n theta}|^p, c real.
double folded_mean(const std::vector<double>& c, long M, double p) {
  double* in = static_cast<double*>(fftw_malloc(sizeof(double) * M));
  auto* out =
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (M / 2 + 1)));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(M), in, out, FFTW_ESTIMATE);
  }
  std::fill(in, in + M, 0.0);
  for (std::size_t n = 0; n < c.size(); ++n) in[n % M] += c[n];
  fftw_execute(plan);
  CompensatedSum sum;
  for (long j = 0; j <= M / 2; ++j) {
    const double mod = std::hypot(out[j][0], out[j][1]);
    const double v = p == 2.0 ? mod * mod : std::pow(mod, p);
    sum.add((j == 0 || j == M / 2) ? v : 2.0 * v);
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return sum.value() / static_cast<double>(M);
}

void check_exponent(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw DomainError("mean exponent p must be positive and finite");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// KernelEvaluator
// ---------------------------------------------------------------------------

KernelEvaluator::KernelEvaluator(RadialWeight weight, const KernelOptions& options)
    : weight_(std::move(weight)), options_(options) {
  in_dhat_ = classify(weight_, RadialGrid(options_.classify_levels, 2)).in_Dhat.holds;
  budget_ = options_.term_budget > 0 ? options_.term_budget
                                     : (in_dhat_ ? (1L << 22) : (1L << 16));

  direct_.resize(static_cast<std::size_t>(std::min(kDirect, budget_ + 1)));
  parallel_for(direct_.size(), [&](std::size_t n) {
    direct_[n] = -std::numbers::ln2 - weight_.log_moment(2.0 * n + 1.0);
  });

  if (budget_ >= kDirect) {
    // log omega_x against log x, x = 2n+1, beyond the direct range
    step_ = std::numbers::ln2 / (in_dhat_ ? 64.0 : 128.0);
    log_x0_ = std::log(2.0 * kDirect - 1.0) - 2.0 * step_;
    const double top = std::log(2.0 * budget_ + 1.0) + 2.0 * step_;
    const auto count = static_cast<std::size_t>(std::ceil((top - log_x0_) / step_)) + 1;
    samples_.resize(count);
    parallel_for(count, [&](std::size_t i) {
      samples_[i] = weight_.log_moment(std::exp(log_x0_ + step_ * i));
    });
  }
}

double KernelEvaluator::log_coefficient(long n) const {
  if (n < 0) throw DomainError("kernel coefficient index must be >= 0");
  if (n < static_cast<long>(direct_.size())) return direct_[n];
  if (n > budget_) {
    std::ostringstream msg;
    msg << "kernel coefficient " << n << " beyond the term budget " << budget_;
    throw NumericError(msg.str(), NAN, INFINITY);
  }
  const double u = (std::log(2.0 * n + 1.0) - log_x0_) / step_;
  return -std::numbers::ln2 - cubic(samples_, u);
}

double KernelEvaluator::growth_slope() const {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  auto add = [&](double x, double y) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  };
  for (std::size_t n = 1; n < direct_.size(); ++n) add(std::log(double(n)), direct_[n]);
  for (std::size_t i = 2; i + 2 < samples_.size(); ++i) {
    const double x = std::exp(log_x0_ + step_ * i);
    add(std::log(0.5 * (x - 1.0)), -std::numbers::ln2 - samples_[i]);
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::vector<double> KernelEvaluator::log_terms(Radius x) const {
  if (!(x.r >= 0.0) || !(x.gap > 0.0)) {
    throw DomainError("kernel series argument must satisfy 0 <= x < 1");
  }
  std::vector<double> out{log_coefficient(0)};
  if (x.r == 0.0) return out;
  const double lx = std::log1p(-x.gap);
  const double log_eps = std::log(options_.tail_tolerance);
  // running log of sum_n a_n x^n
  double log_sum = out[0];
  double ratios[4] = {INFINITY, INFINITY, INFINITY, INFINITY};
  for (long n = 1;; ++n) {
    if (n > budget_) {
      std::ostringstream msg;
      msg << "kernel series not convergent within the term budget: x = "
          << x.r << " (1-x = " << x.gap << "), N = " << budget_;
      throw NumericError(msg.str(), std::exp(log_sum),
                         std::exp(out.back() - log_sum));
    }
    const double lt = log_coefficient(n) + n * lx;
    ratios[n % 4] = std::exp(lt - out.back());
    out.push_back(lt);
    log_sum = std::max(log_sum, lt) + std::log1p(std::exp(-std::abs(log_sum - lt)));
    const double rho = std::max(std::max(ratios[0], ratios[1]),
                                std::max(ratios[2], ratios[3]));
    if (lt - log_sum < log_eps && rho < 1.0) return out;
  }
}

KernelValue KernelEvaluator::series(std::complex<double> w) const {
  const double x = std::abs(w);
  if (!(x < 1.0)) throw DomainError("kernel series needs |conj(z) zeta| < 1");
  const auto lt = log_terms(Radius::from_r(x));
  const double theta = std::arg(w);
  CompensatedSum re, im, mod;
  for (std::size_t n = 0; n < lt.size(); ++n) {
    const double t = std::exp(lt[n]);
    const double phase = theta * static_cast<double>(n);
    re.add(t * std::cos(phase));
    im.add(t * std::sin(phase));
    mod.add(t);
  }
  KernelValue v;
  v.value = {re.value(), im.value()};
  v.terms = static_cast<long>(lt.size());
  double rho = 0.0;
  for (std::size_t i = lt.size() >= 5 ? lt.size() - 4 : 1; i < lt.size(); ++i) {
    rho = std::max(rho, std::exp(lt[i] - lt[i - 1]));
  }
  const double tail = lt.size() > 1 ? std::exp(lt.back()) * rho / (1.0 - rho) : 0.0;
  v.error_bound = tail + 4.0 * std::numeric_limits<double>::epsilon() *
                             static_cast<double>(lt.size()) * mod.value();
  return v;
}

KernelValue KernelEvaluator::eval(std::complex<double> z,
                                  std::complex<double> zeta) const {
  if (!(std::abs(z) < 1.0) || !(std::abs(zeta) < 1.0)) {
    throw DomainError("kernel arguments must lie in the open unit disc");
  }
  return series(std::conj(z) * zeta);
}

// ---------------------------------------------------------------------------
// circle means
// ---------------------------------------------------------------------------

double log_circle_mean(const KernelEvaluator& k, double p, Radius x) {
  check_exponent(p);
  if (x.r == 0.0) return k.log_coefficient(0);
  const auto lt = k.log_terms(x);
  const double shift = *std::max_element(lt.begin(), lt.end());
  std::vector<double> c(lt.size());
  for (std::size_t n = 0; n < lt.size(); ++n) c[n] = std::exp(lt[n] - shift);

  long M = 64;
  while (M < 1.0 / x.gap && M < (1L << 26)) M *= 2;
  double prev = NAN;
  for (; M <= (1L << 27); M *= 2) {
    const double phi = std::pow(folded_mean(c, M, p), 1.0 / p);
    if (std::isfinite(prev) && std::abs(phi - prev) <= 1e-9 * phi) {
      return shift + std::log(phi);
    }
    prev = phi;
  }
  std::ostringstream msg;
  msg << "circle mean: theta quadrature did not converge at x = " << x.r;
  throw NumericError(msg.str(), std::exp(shift) * prev, INFINITY);
}

double circle_mean(const KernelEvaluator& k, double p, Radius x) {
  return std::exp(log_circle_mean(k, p, x));
}

double circle_mean(const KernelEvaluator& k, double p, double x) {
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("circle mean needs 0 <= x < 1");
  return circle_mean(k, p, Radius::from_r(x));
}

double circle_mean_parseval(const KernelEvaluator& k, Radius x) {
  const auto lt = k.log_terms(x);
  const double shift = *std::max_element(lt.begin(), lt.end());
  CompensatedSum sum;
  for (double v : lt) sum.add(std::exp(2.0 * (v - shift)));
  return std::exp(shift) * std::sqrt(sum.value());
}

double mean_comparison(const RadialWeight& omega, double p, Radius x) {
  QuadratureOptions opt;
  opt.tolerance = 1e-10;
  return integrate(
             [&](Radius t) {
               return std::exp(-p * (omega.log_tail(t) + std::log(t.gap)));
             },
             Radius{0.0, 1.0}, x, opt)
      .value;
}

// ---------------------------------------------------------------------------
// MeanTable
// ---------------------------------------------------------------------------

MeanTable::MeanTable(const KernelEvaluator& k, double p,
                     const MeanTableOptions& options)
    : p_(p),
      exact_level_(std::max(1, options.exact_levels)),
      max_level_(std::max(options.max_level, options.exact_levels)),
      inner_step_(0.5 / options.inner_points),
      level_step_(1.0 / options.points_per_level) {
  check_exponent(p);
  // Deepest level the series budget can reach.
  while (exact_level_ > 1) {
    try {
      (void)k.log_terms(Radius::knot(exact_level_));
      break;
    } catch (const NumericError&) {
      --exact_level_;
    }
  }
  (void)k.log_terms(Radius::knot(exact_level_));
  // Continuation by the comparison integral presumes the weight is in D-hat.
  if (!k.accurate()) max_level_ = exact_level_;

  inner_.resize(options.inner_points + 1);
  parallel_for(
      inner_.size(),
      [&](std::size_t i) {
        inner_[i] = circle_mean(k, p, Radius::from_r(inner_step_ * i));
      },
      options.jobs);

  const int per = options.points_per_level;
  const std::size_t exact_count = static_cast<std::size_t>((exact_level_ - 1) * per) + 1;
  const std::size_t total = static_cast<std::size_t>((max_level_ - 1) * per) + 1;
  outer_.resize(total);
  parallel_for(
      exact_count,
      [&](std::size_t i) {
        const Radius x = Radius::from_gap(std::exp2(-(1.0 + level_step_ * i)));
        outer_[i] = log_circle_mean(k, p, x);
      },
      options.jobs);

  if (total > exact_count) {
    // phi^p proportional to int_0^x dt / (omega_hat^p (1-t)^p)
    const RadialWeight& w = k.weight();
    const Radius xe = Radius::knot(exact_level_);
    const double base = mean_comparison(w, p, xe);
    QuadratureOptions opt;
    opt.tolerance = 1e-10;
    auto integrand = [&](Radius t) {
      return std::exp(-p * (w.log_tail(t) + std::log(t.gap))) / base;
    };
    double rel = 1.0;
    Radius prev = xe;
    for (std::size_t i = exact_count; i < total; ++i) {
      const Radius x = Radius::from_gap(std::exp2(-(1.0 + level_step_ * i)));
      rel += integrate(integrand, prev, x, opt).value;
      outer_[i] = outer_[exact_count - 1] + std::log(rel) / p;
      prev = x;
    }
  }
}

bool MeanTable::covers(Radius x) const {
  return x.r >= 0.0 && x.gap >= std::ldexp(1.0, -max_level_) * (1 - 1e-12);
}

bool MeanTable::extrapolated(Radius x) const {
  return x.gap < std::ldexp(1.0, -exact_level_) * (1 - 1e-12);
}

double MeanTable::value(Radius x) const {
  if (!covers(x)) {
    std::ostringstream msg;
    msg << "mean table covers x <= 1 - 2^-" << max_level_ << ", requested 1-x = "
        << x.gap;
    throw DomainError(msg.str());
  }
  if (x.r <= 0.5) return cubic(inner_, x.r / inner_step_);
  const double t = -std::log2(x.gap);
  return std::exp(cubic(outer_, (t - 1.0) / level_step_));
}

// ---------------------------------------------------------------------------
// norms and the comparison sweep
// ---------------------------------------------------------------------------

namespace {

MeanTableOptions table_for(Radius a) {
  MeanTableOptions opt;
  const int level = static_cast<int>(std::ceil(-std::log2(a.gap))) + 1;
  opt.exact_levels = std::clamp(level, 1, opt.exact_levels);
  return opt;
}

}  // namespace

double kernel_norm(const KernelEvaluator&, const RadialWeight& nu, double p,
                   Radius a, const MeanTable& table) {
  if (!(a.r >= 0.0) || !(a.gap > 0.0)) {
    throw DomainError("kernel norm: |a| must lie in [0,1)");
  }
  if (!table.covers(a)) throw DomainError("kernel norm: mean table does not reach |a|");
  if (table.p() != p) throw DomainError("kernel norm: mean table has another exponent");
  QuadratureOptions opt;
  opt.tolerance = 1e-10;
  const auto res = integrate(
      [&](Radius s) {
        if (s.r == 0.0) return 0.0;
        return std::exp(p * std::log(table.value(product(a, s))) +
                        nu.log_density(s) + std::log(s.r));
      },
      Radius{0.0, 1.0}, Radius{1.0, 0.0}, opt, nu.breakpoints());
  return std::pow(2.0 * res.value, 1.0 / p);
}

double kernel_norm(const KernelEvaluator& k, const RadialWeight& nu, double p,
                   Radius a) {
  const MeanTable table(k, p, table_for(a));
  return kernel_norm(k, nu, p, a, table);
}

RatioSweep theorem_a_ratio_sweep(const KernelEvaluator& k, const RadialWeight& nu,
                                 double p, const std::vector<double>& radii) {
  if (radii.empty()) throw DomainError("ratio sweep needs at least one radius");
  double top_gap = 1.0;
  for (double r : radii) {
    if (!(r >= 0.5 && r <= 1.0 - std::ldexp(1.0, -25))) {
      throw DomainError("ratio sweep radii must lie in [0.5, 1 - 2^-25]");
    }
    top_gap = std::min(top_gap, 1.0 - r);
  }
  const MeanTable table(k, p, table_for(Radius::from_gap(top_gap)));
  const RadialWeight& omega = k.weight();
  QuadratureOptions opt;
  opt.tolerance = 1e-10;

  RatioSweep out;
  for (double r : radii) {
    const Radius rho = Radius::from_r(r);
    RatioRow row;
    row.radius = r;
    const Radius x = product(rho, rho);
    row.mean_p = std::pow(table.value(x), p);
    row.mean_comparison = mean_comparison(omega, p, x);
    row.mean_ratio = row.mean_p / row.mean_comparison;
    row.norm_p = std::pow(kernel_norm(k, nu, p, rho, table), p);
    row.norm_comparison =
        integrate(
            [&](Radius t) {
              return std::exp(nu.log_tail(t) -
                              p * (omega.log_tail(t) + std::log(t.gap)));
            },
            Radius{0.0, 1.0}, rho, opt)
            .value;
    row.norm_ratio = row.norm_p / row.norm_comparison;
    out.rows.push_back(row);
  }
  auto spread = [&](auto field) {
    double lo = INFINITY, hi = 0.0;
    for (const auto& row : out.rows) {
      lo = std::min(lo, row.*field);
      hi = std::max(hi, row.*field);
    }
    return hi / lo;
  };
  out.mean_spread = spread(&RatioRow::mean_ratio);
  out.norm_spread = spread(&RatioRow::norm_ratio);
  return out;
}

}  // namespace bergman

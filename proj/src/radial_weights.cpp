#include "bergman/radial_weights.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>

#include "bergman/errors.hpp"

namespace bergman {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// log(1 - log g) for the logarithmic factor log(e/(1-r)).
double log_log_factor(double gap) { return std::log1p(-std::log(gap)); }

// log of the upper incomplete gamma function for a > 0.
double log_upper_gamma(double a, double z) {
  if (z < 500.0) return std::log(boost::math::tgamma(a, z));
  // asymptotic series, z >> a
  double term = 1.0, series = 1.0;
  for (int k = 1; k <= 12; ++k) {
    term *= (a - k) / z;
    series += term;
    if (std::abs(term) < 1e-17) break;
  }
  return (a - 1.0) * std::log(z) - z + std::log(series);
}

void check_radius(Radius x) {
  if (!(x.r >= 0.0) || !(x.gap > 0.0) || !(x.gap <= 1.0)) {
    std::ostringstream msg;
    msg << "radius outside [0,1): r = " << x.r << ", 1-r = " << x.gap;
    throw DomainError(msg.str());
  }
}

QuadratureOptions tail_options() {
  QuadratureOptions opt;
  opt.tolerance = 1e-13;
  return opt;
}

}  // namespace

namespace detail {

class WeightModel {
 public:
  virtual ~WeightModel() = default;
  virtual WeightFamily family() const = 0;
  virtual std::string spec() const = 0;
  virtual double log_density(Radius x) const = 0;
  virtual double density(Radius x) const { return std::exp(log_density(x)); }
  virtual std::optional<double> closed_log_tail(Radius) const {
    return std::nullopt;
  }
  virtual std::span<const double> breakpoints() const { return {}; }

  // log density as a function of log(1-s); overridden where the direct
  // form loses the far tail to underflow of 1-s.
  virtual double log_density_log_gap(double lg) const {
    const double g = std::exp(lg);
    if (g == 0.0) return kNegInf;
    return log_density(Radius{1.0 - g, g});
  }

  // Tail by quadrature in u = -log(1-s), mapped to t in [0,1) through
  // u = U + t/(1-t). Log-type weights become smooth there, which the dyadic
  // remainder fit in s does not resolve to full accuracy.
  virtual double quadrature_log_tail(Radius x) const {
    const double u0 = -std::log(x.gap);
    auto log_g = [this](double u) { return log_density_log_gap(-u) - u; };
    double shift = log_g(u0);
    for (int k = 1; !std::isfinite(shift) && k <= 8; ++k) shift = log_g(u0 + k);
    if (!std::isfinite(shift)) return kNegInf;
    std::vector<double> knots;
    for (double b : breakpoints()) {
      const double ub = -std::log1p(-b);
      if (ub > u0) knots.push_back((ub - u0) / (1.0 + ub - u0));
    }
    const auto res = integrate_to_one(
        [&](Radius t) {
          if (t.gap <= 0.0) return 0.0;
          const double u = u0 + t.r / t.gap;
          const double v = log_g(u) - 2.0 * std::log(t.gap) - shift;
          return v == kNegInf ? 0.0 : std::exp(v);
        },
        Radius{0.0, 1.0}, tail_options(), knots);
    if (res.achieved_tolerance > 1e-10 && !res.extrapolated) {
      throw NumericError("tail quadrature did not reach 1e-10",
                         std::exp(shift) * res.value, res.achieved_tolerance);
    }
    return shift + std::log(res.value);
  }

  double log_tail(Radius x) const {
    if (auto c = closed_log_tail(x)) return *c;
    return quadrature_log_tail(x);
  }
};

struct MomentCache {
  std::shared_mutex mutex;
  std::map<double, double> log_values;
};

namespace {

class StandardModel final : public WeightModel {
 public:
  explicit StandardModel(double alpha) : alpha_(alpha) {
    if (!(alpha > -1.0)) throw DomainError("std: alpha must exceed -1");
  }
  WeightFamily family() const override { return WeightFamily::standard; }
  std::string spec() const override {
    return "std:alpha=" + format_number(alpha_);
  }
  double log_density(Radius x) const override {
    // 1 - r^2 = (1-r)(1+r)
    return std::log1p(alpha_) + alpha_ * std::log(x.gap * (2.0 - x.gap));
  }
  double density(Radius x) const override {
    return (1.0 + alpha_) * std::pow(x.gap * (2.0 - x.gap), alpha_);
  }
  std::optional<double> closed_log_tail(Radius x) const override {
    // int_r^1 (1-s^2)^a ds = B_{1-r^2}(a+1, 1/2) / 2
    //                      = (B(a+1, 1/2) - B_{r^2}(1/2, a+1)) / 2
    double v = 0.0;
    if (x.r < 0.5) {
      v = 0.5 * (1.0 + alpha_) *
          (boost::math::beta(alpha_ + 1.0, 0.5) -
           boost::math::beta(0.5, alpha_ + 1.0, x.r * x.r));
    } else {
      v = 0.5 * (1.0 + alpha_) *
          boost::math::beta(alpha_ + 1.0, 0.5, x.gap * (2.0 - x.gap));
    }
    if (v > 1e-290) return std::log(v);
    // leading asymptotics: omega_hat ~ 2^alpha (1-r)^{alpha+1}
    return alpha_ * std::log(2.0) + (alpha_ + 1.0) * std::log(x.gap);
  }

 private:
  double alpha_;
};

class PowerLogModel final : public WeightModel {
 public:
  PowerLogModel(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!(alpha > -1.0)) throw DomainError("powlog: alpha must exceed -1");
    if (!std::isfinite(beta)) throw DomainError("powlog: beta must be finite");
  }
  WeightFamily family() const override { return WeightFamily::power_log; }
  std::string spec() const override {
    return "powlog:alpha=" + format_number(alpha_) +
           ",beta=" + format_number(beta_);
  }
  double log_density(Radius x) const override {
    double v = alpha_ * std::log(x.gap);
    if (beta_ != 0.0) v += beta_ * log_log_factor(x.gap);
    return v;
  }
  double log_density_log_gap(double lg) const override {
    return alpha_ * lg + (beta_ != 0.0 ? beta_ * std::log1p(-lg) : 0.0);
  }
  std::optional<double> closed_log_tail(Radius x) const override {
    const double a1 = alpha_ + 1.0;
    if (beta_ == 0.0) return a1 * std::log(x.gap) - std::log(a1);
    if (beta_ > -1.0) {
      // substitute t = 1 - log(1-s)
      const double z = a1 * (1.0 - std::log(x.gap));
      return a1 - (beta_ + 1.0) * std::log(a1) +
             log_upper_gamma(beta_ + 1.0, z);
    }
    return std::nullopt;
  }

 private:
  double alpha_, beta_;
};

class ExponentialModel final : public WeightModel {
 public:
  ExponentialModel(double c, double kappa) : c_(c), kappa_(kappa) {
    if (!(c > 0.0) || !(kappa > 0.0)) {
      throw DomainError("exp: c and kappa must be positive");
    }
  }
  WeightFamily family() const override { return WeightFamily::exponential; }
  std::string spec() const override {
    return "exp:c=" + format_number(c_) + ",kappa=" + format_number(kappa_);
  }
  double log_density(Radius x) const override {
    return -c_ / std::pow(x.gap, kappa_);
  }
  // With t = c/g^kappa - c/g0^kappa the tail becomes
  //   e^{-T0} c^{1/kappa}/kappa int_0^inf e^{-t} (t+T0)^{-1/kappa-1} dt,
  // a smooth integrand regardless of how close r is to 1.
  double quadrature_log_tail(Radius x) const override {
    const double t0 = c_ / std::pow(x.gap, kappa_);
    const double expo = -1.0 / kappa_ - 1.0;
    const double scale = 256.0;
    const double base = std::pow(t0, expo);
    auto f = [&](double r) {
      const double t = scale * r;
      return std::exp(-t) * std::pow((t + t0) / t0, expo);
    };
    const double integral = scale * integrate(f, 0.0, 0.5, 1e-14);
    return -t0 + std::log(std::pow(c_, 1.0 / kappa_) / kappa_) +
           std::log(base) + std::log(integral);
  }

 private:
  double c_, kappa_;
};

class InverseLogModel final : public WeightModel {
 public:
  WeightFamily family() const override { return WeightFamily::inverse_log; }
  std::string spec() const override { return "invlog:"; }
  double log_density(Radius x) const override {
    return -std::log(x.gap) - 2.0 * log_log_factor(x.gap);
  }
  std::optional<double> closed_log_tail(Radius x) const override {
    return -log_log_factor(x.gap);
  }
  double log_density_log_gap(double lg) const override {
    return -lg - 2.0 * std::log1p(-lg);
  }
};

class CounterexampleModel final : public WeightModel {
 public:
  CounterexampleModel(RadialWeight base, double p, bool is_nu,
                      EtaExponent exponent)
      : base_(std::move(base)), p_(p), is_nu_(is_nu), exponent_(exponent) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
      throw DomainError("counterexample weights need p >= 1");
    }
  }
  WeightFamily family() const override {
    return is_nu_ ? WeightFamily::counterexample_nu
                  : WeightFamily::counterexample_eta;
  }
  std::string spec() const override {
    std::string s = (is_nu_ ? "cex-nu:base=" : "cex-eta:base=") +
                    base_.spec() + ",p=" + format_number(p_);
    if (!is_nu_ && exponent_ == EtaExponent::constant) s += ",exponent=constant";
    return s;
  }
  double log_density(Radius x) const override {
    const double q = p_ - 1.0;  // p / p'
    const double lw = base_.log_density(x);
    if (!std::isfinite(lw)) return lw;
    double v = lw + q * base_.log_tail(x);
    const double power =
        is_nu_ ? 2.0 : (exponent_ == EtaExponent::literal ? x.r : 1.0);
    if (q != 0.0 && power != 0.0) v += power * q * log_log_factor(x.gap);
    return v;
  }

 private:
  RadialWeight base_;
  double p_;
  bool is_nu_;
  EtaExponent exponent_;
};

class TabulatedModel final : public WeightModel {
 public:
  TabulatedModel(std::vector<double> radii, std::vector<double> values)
      : r_(std::move(radii)), w_(std::move(values)) {
    if (r_.size() < 2 || r_.size() != w_.size()) {
      throw DomainError("tabulated weight needs >= 2 matching (r, omega) rows");
    }
    for (std::size_t i = 0; i < r_.size(); ++i) {
      if (!(r_[i] >= 0.0 && r_[i] < 1.0)) {
        throw DomainError("tabulated weight: radius outside [0,1)");
      }
      if (i > 0 && !(r_[i] > r_[i - 1])) {
        throw DomainError("tabulated weight: radii must increase strictly");
      }
      if (!(w_[i] >= 0.0) || !std::isfinite(w_[i])) {
        throw DomainError("tabulated weight: values must be finite and >= 0");
      }
    }
    if (!(w_.back() > 0.0)) {
      throw DomainError("tabulated weight: last value must be positive");
    }
    // exact tails of the interpolant (constant continuation past the last node)
    suffix_.assign(r_.size(), 0.0);
    suffix_.back() = w_.back() * (1.0 - r_.back());
    for (std::size_t i = r_.size() - 1; i-- > 0;) {
      suffix_[i] = suffix_[i + 1] + 0.5 * (w_[i] + w_[i + 1]) * (r_[i + 1] - r_[i]);
    }
  }
  WeightFamily family() const override { return WeightFamily::tabulated; }
  std::string spec() const override {
    return source_.empty() ? "file:<memory>" : "file:" + source_;
  }
  void set_source(std::string s) { source_ = std::move(s); }

  double density(Radius x) const override {
    if (x.r <= r_.front()) return w_.front();
    if (x.r >= r_.back()) return w_.back();
    const auto it = std::upper_bound(r_.begin(), r_.end(), x.r);
    const std::size_t i = static_cast<std::size_t>(it - r_.begin()) - 1;
    const double t = (x.r - r_[i]) / (r_[i + 1] - r_[i]);
    return w_[i] + t * (w_[i + 1] - w_[i]);
  }
  double log_density(Radius x) const override { return std::log(density(x)); }
  std::optional<double> closed_log_tail(Radius x) const override {
    if (x.r >= r_.back()) return std::log(w_.back() * x.gap);
    if (x.r < r_.front()) {
      return std::log(w_.front() * (r_.front() - x.r) + suffix_.front());
    }
    const auto it = std::upper_bound(r_.begin(), r_.end(), x.r);
    const std::size_t j = static_cast<std::size_t>(it - r_.begin());
    const double v =
        0.5 * (density(x) + w_[j]) * (r_[j] - x.r) + suffix_[j];
    return std::log(v);
  }
  std::span<const double> breakpoints() const override { return r_; }

 private:
  std::vector<double> r_, w_, suffix_;
  std::string source_;
};

}  // namespace
}  // namespace detail

// ---------------------------------------------------------------------------
// RadialWeight
// ---------------------------------------------------------------------------

RadialWeight::RadialWeight(std::shared_ptr<const detail::WeightModel> model)
    : model_(std::move(model)),
      cache_(std::make_shared<detail::MomentCache>()) {}

RadialWeight RadialWeight::standard(double alpha) {
  return RadialWeight(std::make_shared<detail::StandardModel>(alpha));
}
RadialWeight RadialWeight::power_log(double alpha, double beta) {
  return RadialWeight(std::make_shared<detail::PowerLogModel>(alpha, beta));
}
RadialWeight RadialWeight::exponential(double c, double kappa) {
  return RadialWeight(std::make_shared<detail::ExponentialModel>(c, kappa));
}
RadialWeight RadialWeight::inverse_log() {
  return RadialWeight(std::make_shared<detail::InverseLogModel>());
}
RadialWeight RadialWeight::counterexample_nu(const RadialWeight& base,
                                             double p) {
  return RadialWeight(std::make_shared<detail::CounterexampleModel>(
      base, p, true, EtaExponent::literal));
}
RadialWeight RadialWeight::counterexample_eta(const RadialWeight& base,
                                              double p, EtaExponent exponent) {
  return RadialWeight(
      std::make_shared<detail::CounterexampleModel>(base, p, false, exponent));
}
RadialWeight RadialWeight::tabulated(std::vector<double> radii,
                                     std::vector<double> values) {
  return RadialWeight(std::make_shared<detail::TabulatedModel>(
      std::move(radii), std::move(values)));
}

RadialWeight RadialWeight::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open weight table " + path.string());
  std::vector<double> r, w;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'r,omega'");
    }
    try {
      const double rv = std::stod(line.substr(0, comma));
      const double wv = std::stod(line.substr(comma + 1));
      r.push_back(rv);
      w.push_back(wv);
    } catch (const std::invalid_argument&) {
      if (r.empty()) continue;  // header row
      throw DomainError(path.string() + ":" + std::to_string(lineno) +
                        ": non-numeric row");
    }
  }
  auto model = std::make_shared<detail::TabulatedModel>(std::move(r), std::move(w));
  model->set_source(path.string());
  return RadialWeight(std::move(model));
}

WeightFamily RadialWeight::family() const { return model_->family(); }
std::string RadialWeight::spec() const { return model_->spec(); }

double RadialWeight::density(Radius x) const {
  check_radius(x);
  return model_->density(x);
}
double RadialWeight::log_density(Radius x) const {
  check_radius(x);
  return model_->log_density(x);
}
double RadialWeight::log_tail(Radius x) const {
  check_radius(x);
  return model_->log_tail(x);
}
double RadialWeight::tail(Radius x) const { return std::exp(log_tail(x)); }
bool RadialWeight::has_closed_form_tail() const {
  return model_->closed_log_tail(Radius::from_r(0.5)).has_value();
}
double RadialWeight::quadrature_tail(Radius x) const {
  check_radius(x);
  return std::exp(model_->quadrature_log_tail(x));
}
std::span<const double> RadialWeight::breakpoints() const {
  return model_->breakpoints();
}

double RadialWeight::log_moment(double x) const {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("moment: exponent must be finite and >= 0");
  }
  {
    std::shared_lock lock(cache_->mutex);
    if (auto it = cache_->log_values.find(x); it != cache_->log_values.end()) {
      return it->second;
    }
  }
  const auto& model = *model_;
  auto phase = [&](Radius y) {
    const double ld = model.log_density(y);
    if (x == 0.0) return ld;
    return x * std::log1p(-y.gap) + ld;
  };
  // Shift by the largest sampled exponent; the integrand then peaks near 1.
  double shift = kNegInf;
  for (int k = x > 0.0 ? 1 : 0; k <= 240; ++k) {
    shift = std::max(shift, phase(Radius::from_gap(std::exp2(-0.25 * k))));
  }
  if (!std::isfinite(shift)) throw NumericError("moment: weight vanishes", 0.0, INFINITY);
  // Quadrature up to 1 - 2^-J, where s^x differs from 1 by less than
  // x 2^-J; the rest is the weight's own tail, closed or computed in log(1-s).
  const int cut = 64 + static_cast<int>(std::ceil(std::log2(x + 1.0)));
  const Radius edge = Radius::from_gap(std::exp2(-cut));
  QuadratureOptions opt;
  opt.tolerance = 1e-13;
  auto res = integrate(
      [&](Radius y) { return std::exp(phase(y) - shift); }, Radius{0.0, 1.0},
      edge, opt, model.breakpoints());
  const double rest = model.log_tail(edge) - shift;
  if (rest > kNegInf) res.value += std::exp(rest);
  if (!(res.value > 0.0)) {
    throw NumericError("moment: quadrature produced a non-positive value",
                       res.value, INFINITY);
  }
  if (res.achieved_tolerance > 1e-12) {
    throw NumericError("moment: relative tolerance 1e-12 not reached",
                       std::exp(shift) * res.value, res.achieved_tolerance);
  }
  const double value = shift + std::log(res.value);
  std::unique_lock lock(cache_->mutex);
  cache_->log_values.emplace(x, value);
  return value;
}

double RadialWeight::moment(double x) const { return std::exp(log_moment(x)); }

double eval_weight(const RadialWeight& w, double r) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw DomainError("eval_weight: r must lie in [0,1), got " +
                      format_number(r));
  }
  return w.density(Radius::from_r(r));
}

// ---------------------------------------------------------------------------
// mini-language
// ---------------------------------------------------------------------------

namespace {

double parse_number(const std::string& text, const std::string& context) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || text.empty()) {
    throw DomainError("malformed number '" + text + "' in " + context);
  }
  return v;
}

std::map<std::string, double> parse_params(
    const std::string& body, const std::string& context,
    std::initializer_list<const char*> allowed) {
  std::map<std::string, double> out;
  if (body.empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw DomainError("expected key=value, got '" + item + "' in " + context);
    }
    const std::string key = item.substr(0, eq);
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      throw DomainError("unknown parameter '" + key + "' in " + context);
    }
    out[key] = parse_number(item.substr(eq + 1), context);
  }
  return out;
}

double require(const std::map<std::string, double>& params, const char* key,
               const std::string& context) {
  auto it = params.find(key);
  if (it == params.end()) {
    throw DomainError(std::string("missing parameter '") + key + "' in " +
                      context);
  }
  return it->second;
}

}  // namespace

RadialWeight parse_weight(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw DomainError("weight spec '" + spec + "' lacks a 'family:' prefix");
  }
  const std::string family = spec.substr(0, colon);
  const std::string body = spec.substr(colon + 1);
  const std::string ctx = "'" + spec + "'";

  if (family == "std") {
    const auto p = parse_params(body, ctx, {"alpha"});
    return RadialWeight::standard(require(p, "alpha", ctx));
  }
  if (family == "powlog") {
    const auto p = parse_params(body, ctx, {"alpha", "beta"});
    const double beta = p.count("beta") ? p.at("beta") : 0.0;
    return RadialWeight::power_log(require(p, "alpha", ctx), beta);
  }
  if (family == "exp") {
    const auto p = parse_params(body, ctx, {"c", "kappa"});
    const double kappa = p.count("kappa") ? p.at("kappa") : 1.0;
    return RadialWeight::exponential(require(p, "c", ctx), kappa);
  }
  if (family == "invlog") {
    if (!body.empty()) throw DomainError("invlog takes no parameters in " + ctx);
    return RadialWeight::inverse_log();
  }
  if (family == "cex-nu" || family == "cex-eta") {
    if (body.rfind("base=", 0) != 0) {
      throw DomainError("counterexample spec must start with base= in " + ctx);
    }
    std::string rest = body.substr(5);
    std::optional<double> p;
    EtaExponent exponent = EtaExponent::literal;
    bool exponent_seen = false;
    // trailing keys belong to the outer spec
    for (int pass = 0; pass < 2; ++pass) {
      const auto comma = rest.rfind(',');
      if (comma == std::string::npos) break;
      const std::string item = rest.substr(comma + 1);
      if (item.rfind("p=", 0) == 0 && !p) {
        p = parse_number(item.substr(2), ctx);
      } else if (item.rfind("exponent=", 0) == 0 && !exponent_seen &&
                 family == "cex-eta") {
        const std::string v = item.substr(9);
        if (v == "literal") {
          exponent = EtaExponent::literal;
        } else if (v == "constant") {
          exponent = EtaExponent::constant;
        } else {
          throw DomainError("exponent must be literal|constant in " + ctx);
        }
        exponent_seen = true;
      } else {
        break;
      }
      rest = rest.substr(0, comma);
    }
    if (!p) throw DomainError("missing parameter 'p' in " + ctx);
    const RadialWeight base = parse_weight(rest);
    if (family == "cex-nu") return RadialWeight::counterexample_nu(base, *p);
    return RadialWeight::counterexample_eta(base, *p, exponent);
  }
  if (family == "file") {
    if (body.empty()) throw DomainError("file: needs a path in " + ctx);
    return RadialWeight::from_csv(body);
  }
  throw DomainError("unknown weight family '" + family + "' in " + ctx);
}

// ---------------------------------------------------------------------------
// classification
// ---------------------------------------------------------------------------

namespace {

// Strict monotone change over the trailing window by more than `factor`.
bool drifts(std::span<const double> v, int window, double factor,
            bool increasing) {
  if (static_cast<int>(v.size()) < window || window < 2) return false;
  const auto tail = v.subspan(v.size() - window);
  for (std::size_t i = 1; i < tail.size(); ++i) {
    if (increasing ? !(tail[i] > tail[i - 1]) : !(tail[i] < tail[i - 1])) {
      return false;
    }
  }
  return increasing ? tail.back() > factor * tail.front()
                    : tail.front() > factor * tail.back();
}

}  // namespace

WeightClassReport classify(const RadialWeight& w, const RadialGrid& grid,
                           const ClassifyOptions& options) {
  WeightClassReport rep;
  rep.grid_levels = grid.levels();
  rep.grid_nodes = grid.nodes_per_panel();
  rep.caveat =
      "verdicts evaluated on dyadic knots 1-2^-k, k <= " +
      std::to_string(grid.levels()) + "; class definitions quantify over all r < 1";
  if (grid.levels() < 20) rep.caveat += "; grid shallower than 1-2^-20";

  const auto knots = grid.knots();
  const int L = grid.levels();
  std::vector<double> lt(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) lt[k] = w.log_tail(knots[k]);

  // upper doubling
  std::vector<double> doubling(L);
  double max_log = kNegInf;
  for (int k = 0; k < L; ++k) {
    const double d = lt[k] - lt[k + 1];
    max_log = std::max(max_log, d);
    doubling[k] = std::exp(std::min(d, 700.0));
  }
  rep.in_Dhat.constant = std::exp(std::min(max_log, 700.0));
  rep.in_Dhat.beta = max_log / std::log(2.0);
  rep.in_Dhat.drifting =
      drifts(doubling, options.window, options.drift_factor, true);
  rep.in_Dhat.holds = std::isfinite(max_log) &&
                      max_log < std::log(options.doubling_cap) &&
                      !rep.in_Dhat.drifting;

  // lower doubling
  double min_slope = INFINITY;
  for (int k = 0; k < L; ++k) {
    min_slope = std::min(min_slope, (lt[k] - lt[k + 1]) / std::log(2.0));
  }
  rep.in_Dcheck.gamma = min_slope;
  for (int K : {2, 4, 8, 16}) {
    std::vector<double> excess(knots.size());
    double inf_ratio = INFINITY;
    for (std::size_t k = 0; k < knots.size(); ++k) {
      const Radius far = Radius::from_gap(knots[k].gap / K);
      const double ratio = std::exp(std::min(lt[k] - w.log_tail(far), 700.0));
      inf_ratio = std::min(inf_ratio, ratio);
      excess[k] = ratio - 1.0;
    }
    const bool decays =
        drifts(excess, options.window, options.drift_factor, false);
    if (inf_ratio >= 1.0 + options.lower_margin && !decays) {
      rep.in_Dcheck.holds = true;
      rep.in_Dcheck.K = K;
      rep.in_Dcheck.constant = inf_ratio;
      break;
    }
    if (K == 2) rep.in_Dcheck.constant = inf_ratio;
  }

  // regularity ratio omega(r)(1-r)/omega_hat(r)
  std::vector<double> q(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) {
    q[k] = std::exp(w.log_density(knots[k]) + std::log(knots[k].gap) - lt[k]);
  }
  rep.regular.min_ratio = *std::min_element(q.begin(), q.end());
  rep.regular.max_ratio = *std::max_element(q.begin(), q.end());
  rep.regular.drifting =
      drifts(q, options.window, options.drift_factor, true) ||
      drifts(q, options.window, options.drift_factor, false);
  rep.regular.holds = rep.regular.min_ratio > 0.0 &&
                      rep.regular.max_ratio <=
                          options.regular_ratio_cap * rep.regular.min_ratio &&
                      !rep.regular.drifting && rep.in_Dhat.holds &&
                      rep.in_Dcheck.holds;

  // least squares slope of log omega_hat against log(1-r), knots 1..L
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const double x = std::log(knots[k].gap);
    sx += x;
    sy += lt[k];
    sxx += x * x;
    sxy += x * lt[k];
    ++n;
  }
  if (n >= 2) rep.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return rep;
}

}  // namespace bergman

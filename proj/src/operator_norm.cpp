#include "bergman/operator_norm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "bergman/errors.hpp"
#include "bergman/parallel.hpp"

namespace bergman {

namespace detail {

struct OperatorData {
  std::size_t rows = 0, cols = 0;
  std::vector<double> K;
  std::vector<double> source, target;
  double p = 2.0;
  double truncation_error = 0.0;
  // assembled operators only
  std::vector<Radius> source_points;
  std::vector<double> column_factor;
  std::optional<MeanTable> means;
};

}  // namespace detail

namespace {

double lp_norm(const std::vector<double>& f, const std::vector<double>& mu,
               double p) {
  CompensatedSum s;
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    s.add(std::pow(std::abs(f[i]) / scale, p) * mu[i]);
  }
  return scale * std::pow(s.value(), 1.0 / p);
}

}  // namespace

RadialOperator RadialOperator::from_matrix(std::vector<double> K, std::size_t rows,
                                           std::size_t cols,
                                           std::vector<double> source_measure,
                                           std::vector<double> target_measure,
                                           double p) {
  if (K.size() != rows * cols || source_measure.size() != cols ||
      target_measure.size() != rows) {
    throw DomainError("operator: matrix and measure sizes disagree");
  }
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("operator: needs 1 < p < inf");
  for (double v : K) {
    if (!(v >= 0.0)) throw DomainError("operator: entries must be nonnegative");
  }
  for (double v : source_measure) {
    if (!(v > 0.0)) throw DomainError("operator: source measure must be positive");
  }
  for (double v : target_measure) {
    if (!(v >= 0.0)) throw DomainError("operator: target measure must be nonnegative");
  }
  auto d = std::make_shared<detail::OperatorData>();
  d->rows = rows;
  d->cols = cols;
  d->K = std::move(K);
  d->source = std::move(source_measure);
  d->target = std::move(target_measure);
  d->p = p;
  return RadialOperator(std::move(d), false);
}

std::size_t RadialOperator::rows() const { return adjoint_ ? data_->cols : data_->rows; }
std::size_t RadialOperator::cols() const { return adjoint_ ? data_->rows : data_->cols; }

double RadialOperator::exponent() const {
  return adjoint_ ? data_->p / (data_->p - 1.0) : data_->p;
}

double RadialOperator::entry(std::size_t i, std::size_t j) const {
  const auto& d = *data_;
  if (!adjoint_) return d.K[i * d.cols + j];
  return d.K[j * d.cols + i] * d.target[j] / d.source[i];
}

const std::vector<double>& RadialOperator::source_measure() const {
  return adjoint_ ? data_->target : data_->source;
}

const std::vector<double>& RadialOperator::target_measure() const {
  return adjoint_ ? data_->source : data_->target;
}

std::vector<double> RadialOperator::apply(const std::vector<double>& f) const {
  const auto& d = *data_;
  if (f.size() != cols()) throw DomainError("operator: vector size mismatch");
  if (!adjoint_) {
    std::vector<double> out(d.rows);
    for (std::size_t i = 0; i < d.rows; ++i) {
      CompensatedSum s;
      const double* row = &d.K[i * d.cols];
      for (std::size_t j = 0; j < d.cols; ++j) s.add(row[j] * f[j]);
      out[i] = s.value();
    }
    return out;
  }
  // (1/source) K^T (target * g)
  std::vector<CompensatedSum> acc(d.cols);
  for (std::size_t i = 0; i < d.rows; ++i) {
    const double w = d.target[i] * f[i];
    if (w == 0.0) continue;
    const double* row = &d.K[i * d.cols];
    for (std::size_t j = 0; j < d.cols; ++j) acc[j].add(row[j] * w);
  }
  std::vector<double> out(d.cols);
  for (std::size_t j = 0; j < d.cols; ++j) out[j] = acc[j].value() / d.source[j];
  return out;
}

double RadialOperator::min_entry() const {
  return *std::min_element(data_->K.begin(), data_->K.end());
}

double RadialOperator::truncation_error() const { return data_->truncation_error; }

std::vector<double> RadialOperator::kernel_row(Radius r) const {
  const auto& d = *data_;
  if (!d.means) throw DomainError("operator: kernel rows need an assembled operator");
  std::vector<double> row(d.cols);
  for (std::size_t j = 0; j < d.cols; ++j) {
    row[j] = 2.0 * d.means->value(product(r, d.source_points[j])) * d.column_factor[j];
  }
  return row;
}

std::vector<double> RadialOperator::column_factor() const {
  return data_->column_factor;
}

double RadialOperator::apply_at(Radius r, const std::vector<double>& f) const {
  if (adjoint_) throw DomainError("operator: apply_at is defined for T, not T*");
  const auto row = kernel_row(r);
  if (f.size() != row.size()) throw DomainError("operator: vector size mismatch");
  CompensatedSum s;
  for (std::size_t j = 0; j < row.size(); ++j) s.add(row[j] * f[j]);
  return s.value();
}

RadialOperator assemble(const TripleConfig& cfg, const RadialGrid& grid,
                        const MeanTable& means) {
  if (!(cfg.p > 1.0)) throw DomainError("assemble: needs 1 < p < infinity");
  if (means.p() != 1.0) throw DomainError("assemble: needs the p = 1 mean table");
  const auto nodes = grid.nodes();
  const auto weights = grid.weights();
  const std::size_t n = nodes.size();
  const Radius corner = product(nodes.back(), nodes.back());
  if (!means.covers(corner)) {
    throw DomainError(
        "assemble: mean table does not cover the largest product r_i s_j");
  }
  auto d = std::make_shared<detail::OperatorData>();
  d->rows = d->cols = n;
  d->p = cfg.p;
  d->K.resize(n * n);
  d->source.resize(n);
  d->target.resize(n);
  d->column_factor.resize(n);
  d->source_points.assign(nodes.begin(), nodes.end());
  for (std::size_t j = 0; j < n; ++j) {
    const Radius s = nodes[j];
    d->column_factor[j] = cfg.omega.density(s) * s.r * weights[j];
    d->source[j] = 2.0 * cfg.nu.density(s) * s.r * weights[j];
    d->target[j] = 2.0 * cfg.eta.density(s) * s.r * weights[j];
    if (!(d->source[j] > 0.0)) {
      throw DomainError("assemble: nu vanishes at a grid node");
    }
  }
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      d->K[i * n + j] =
          2.0 * means.value(product(nodes[i], nodes[j])) * d->column_factor[j];
    }
  });

  // Mass of T1 beyond the last knot, phi_1 bounded by its value at r_i * 1.
  const Radius cut = grid.cut();
  const double beyond = cfg.omega.tail(cut);
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum row;
    for (std::size_t j = 0; j < n; ++j) row.add(d->K[i * n + j]);
    const Radius x = product(nodes[i], Radius{1.0 - cut.gap * 0.5, cut.gap * 0.5});
    const double lost = 2.0 * (means.covers(x) ? means.value(x) : means.value(means.limit())) * beyond;
    d->truncation_error = std::max(d->truncation_error, lost / row.value());
  }
  d->means = means;
  return RadialOperator(std::move(d), false);
}

RadialOperator adjoint(const RadialOperator& T) {
  return RadialOperator(T.data_, !T.adjoint_);
}

double rayleigh(const RadialOperator& T, const std::vector<double>& f) {
  const double p = T.exponent();
  const double den = lp_norm(f, T.source_measure(), p);
  if (!(den > 0.0)) throw DomainError("rayleigh: f has zero norm");
  return lp_norm(T.apply(f), T.target_measure(), p) / den;
}

NormEstimate boyd_norm(const RadialOperator& T, const BoydOptions& options) {
  const double p = T.exponent();
  const RadialOperator dual = adjoint(T);
  const auto& mu = T.source_measure();
  std::vector<double> f = options.seed.empty()
                              ? std::vector<double>(T.cols(), 1.0)
                              : options.seed;
  if (f.size() != T.cols()) throw DomainError("boyd: seed size mismatch");
  for (double v : f) {
    if (!(v > 0.0)) throw DomainError("boyd: seed must be strictly positive");
  }
  NormEstimate est;
  double prev = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    const double norm_f = lp_norm(f, mu, p);
    for (double& v : f) v /= norm_f;
    auto u = T.apply(f);
    const double lambda = lp_norm(u, T.target_measure(), p);
    est.trace.push_back(lambda);
    est.iterations = it + 1;
    est.value = lambda;
    est.vector = f;
    if (it > 0 && std::abs(lambda - prev) < options.tolerance * lambda) {
      est.converged = true;
      break;
    }
    prev = lambda;
    const double scale = *std::max_element(u.begin(), u.end());
    for (double& v : u) v = std::pow(v / scale, p - 1.0);
    auto v = dual.apply(u);
    for (double& x : v) x = std::pow(x, 1.0 / (p - 1.0));
    f = std::move(v);
  }
  return est;
}

double monomial_identity_check(const KernelEvaluator& k, int n, double z) {
  if (n < 0 || n > 8) throw DomainError("monomial check needs 0 <= n <= 8");
  if (!(std::abs(z) <= 0.9)) throw DomainError("monomial check needs |z| <= 0.9");
  if (z == 0.0 && n > 0) throw DomainError("monomial check needs z != 0 for n > 0");
  const RadialWeight& w = k.weight();
  QuadratureOptions opt;
  opt.tolerance = 1e-13;
  const double moment =
      integrate([&](Radius s) { return std::pow(s.r, 2 * n + 1) * w.density(s); },
                Radius{0.0, 1.0}, Radius{1.0, 0.0}, opt, w.breakpoints())
          .value;
  const double zn = std::pow(z, n);
  const double result = 2.0 * moment * k.coefficient(n) * zn;
  return std::abs(result - zn) / std::abs(zn);
}

}  // namespace bergman

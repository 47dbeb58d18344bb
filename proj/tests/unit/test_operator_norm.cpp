#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <memory>

#include "bergman/errors.hpp"
#include "bergman/operator_norm.hpp"

using namespace bergman;

namespace {

TripleConfig same(double alpha, double p) {
  const auto w = RadialWeight::standard(alpha);
  return TripleConfig(w, w, w, p);
}

// One mean table per alpha, shared by the cases below.
const MeanTable& means_for(double alpha) {
  static std::map<double, std::unique_ptr<KernelEvaluator>> kernels;
  static std::map<double, std::unique_ptr<MeanTable>> tables;
  auto it = tables.find(alpha);
  if (it == tables.end()) {
    kernels[alpha] = std::make_unique<KernelEvaluator>(RadialWeight::standard(alpha));
    it = tables.emplace(alpha, std::make_unique<MeanTable>(*kernels[alpha], 1.0)).first;
  }
  return *it->second;
}

RadialOperator standard_operator(double alpha, double p, int L, int nodes = 16) {
  return assemble(same(alpha, p), RadialGrid(L, nodes), means_for(alpha));
}

double lp(const std::vector<double>& f, const std::vector<double>& mu, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::pow(std::abs(f[i]), p) * mu[i];
  return std::pow(s, 1.0 / p);
}

}  // namespace

TEST_SUITE("operator_norm") {

TEST_CASE("assemble: T1 for the unweighted kernel") {
  const auto T = standard_operator(0.0, 2.0, 24);
  const std::vector<double> one(T.cols(), 1.0);
  const double r = 0.5;
  CHECK(T.apply_at(Radius::from_r(r), one) ==
        doctest::Approx(-std::log(1.0 - r * r) / (r * r)).epsilon(1e-6));
  CHECK(T.apply_at(Radius{0.0, 1.0}, one) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(T.min_entry() >= 0.0);
  CHECK(T.truncation_error() > 0.0);
  // worst row is the outermost, where the omitted corner is largest
  CHECK(T.truncation_error() < 0.1);
}

TEST_CASE("assemble: the row at r = 0 is the constant a_0 profile") {
  for (double alpha : {0.0, 1.0, 3.0}) {
    const auto T = standard_operator(alpha, 2.0, 20);
    const auto row = T.kernel_row(Radius{0.0, 1.0});
    const auto cf = T.column_factor();
    const double first = row[0] / cf[0];
    for (std::size_t j = 0; j < row.size(); ++j) {
      CHECK(std::abs(row[j] / cf[j] - first) <= 1e-10 * first);
    }
  }
}

TEST_CASE("assemble: coverage gap is a domain error") {
  const KernelEvaluator k(RadialWeight::standard(0.0));
  MeanTableOptions opt;
  opt.exact_levels = 8;
  opt.max_level = 10;
  const MeanTable shallow(k, 1.0, opt);
  CHECK_THROWS_AS(assemble(same(0.0, 2.0), RadialGrid(20, 16), shallow), DomainError);
  CHECK_THROWS_AS(assemble(same(0.0, 2.0), RadialGrid(20, 16), MeanTable(k, 2.0, opt)),
                  DomainError);
}

TEST_CASE("boyd: rank-one kernel matches its closed-form norm") {
  const std::size_t n = 7, m = 5;
  std::vector<double> g(m), h(n), mu(n), tau(m);
  for (std::size_t i = 0; i < m; ++i) {
    g[i] = 1.0 + 0.3 * i;
    tau[i] = 0.5 + 0.1 * i * i;
  }
  for (std::size_t j = 0; j < n; ++j) {
    h[j] = 2.0 / (1.0 + j);
    mu[j] = 0.2 + 0.05 * j;
  }
  std::vector<double> K(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) K[i * n + j] = g[i] * h[j];
  for (double p : {1.5, 2.0, 3.0}) {
    const double q = p / (p - 1.0);
    std::vector<double> hm(n);
    for (std::size_t j = 0; j < n; ++j) hm[j] = h[j] / mu[j];
    const double exact = lp(g, tau, p) * lp(hm, mu, q);
    const auto T = RadialOperator::from_matrix(K, m, n, mu, tau, p);
    BoydOptions opt;
    opt.tolerance = 1e-12;
    const auto est = boyd_norm(T, opt);
    CAPTURE(p);
    CHECK(est.converged);
    CHECK(est.value == doctest::Approx(exact).epsilon(1e-8));
    const auto dual = boyd_norm(adjoint(T), opt);
    CHECK(dual.value == doctest::Approx(exact).epsilon(1e-8));
  }
}

TEST_CASE("boyd: identity matrix with unit measures") {
  const std::size_t n = 6;
  std::vector<double> K(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) K[i * n + i] = 1.0;
  const auto T = RadialOperator::from_matrix(K, n, n, std::vector<double>(n, 1.0),
                                             std::vector<double>(n, 1.0), 2.0);
  const auto est = boyd_norm(T);
  CHECK(est.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.converged);
}

TEST_CASE("boyd: invalid inputs") {
  CHECK_THROWS_AS(RadialOperator::from_matrix({1.0, -1.0}, 1, 2, {1.0, 1.0}, {1.0}, 2.0),
                  DomainError);
  CHECK_THROWS_AS(RadialOperator::from_matrix({1.0, 1.0}, 1, 2, {1.0, 1.0}, {1.0}, 1.0),
                  DomainError);
  const auto T = RadialOperator::from_matrix({1.0, 1.0}, 1, 2, {1.0, 1.0}, {1.0}, 2.0);
  BoydOptions opt;
  opt.seed = {1.0, 0.0};
  CHECK_THROWS_AS(boyd_norm(T, opt), DomainError);
  CHECK_THROWS_AS(rayleigh(T, {0.0, 0.0}), DomainError);
}

TEST_CASE("boyd: maxiter reached returns the best estimate unconverged") {
  const auto T = standard_operator(0.0, 2.0, 20);
  BoydOptions opt;
  opt.max_iterations = 2;
  opt.tolerance = 1e-15;
  const auto est = boyd_norm(T, opt);
  CHECK_FALSE(est.converged);
  CHECK(est.iterations == 2);
  CHECK(est.value == est.trace.back());
}

TEST_CASE("adjoint: double adjoint is the original structure") {
  const auto T = standard_operator(1.0, 3.0, 12);
  const auto A = adjoint(T);
  CHECK(A.is_adjoint());
  CHECK(adjoint(A) == T);
  CHECK(A.exponent() == doctest::Approx(1.5));
  const auto B = adjoint(A);
  for (std::size_t i = 0; i < T.rows(); i += 17)
    for (std::size_t j = 0; j < T.cols(); j += 13) CHECK(B.entry(i, j) == T.entry(i, j));
}

TEST_CASE("standard sweep: monotone traces, adjoint equality, witnesses, band") {
  double lo = INFINITY, hi = 0.0;
  const RadialGrid grid(24, 16);
  for (double alpha : {-0.5, 0.0, 1.0, 3.0}) {
    for (double p : {1.5, 2.0, 3.0}) {
      CAPTURE(alpha);
      CAPTURE(p);
      const auto cfg = same(alpha, p);
      const auto T = assemble(cfg, grid, means_for(alpha));
      const auto est = boyd_norm(T);
      CHECK(est.converged);
      CHECK(est.value == est.trace.back());
      for (std::size_t i = 1; i < est.trace.size(); ++i) {
        CHECK(est.trace[i] >= est.trace[i - 1] * (1.0 - 10 * std::numeric_limits<double>::epsilon()));
      }
      CHECK(rayleigh(T, est.vector) == doctest::Approx(est.value).epsilon(1e-6));
      if (p == 2.0) {
        const auto dual = boyd_norm(adjoint(T));
        CHECK(std::abs(dual.value - est.value) <= 1e-3 * est.value);
      }
      for (double t : {0.0, 0.5, 0.9, 0.99}) {
        for (double n : {1.0, 10.0, 100.0}) {
          CHECK(rayleigh(T, test_function(cfg, n, t, grid)) <= est.value * (1.0 + 1e-6));
        }
      }
      std::vector<double> last(T.cols(), 0.0);
      for (std::size_t j = T.cols() - 16; j < T.cols(); ++j) last[j] = 1.0;
      const double q = rayleigh(T, last);
      CHECK(q > 0.0);
      CHECK(q <= est.value * (1.0 + 1e-6));
      const double lb = necessity_lower_bound(cfg, grid).sup;
      CHECK(lb <= 1.05 * est.value);
      const double ratio = est.value / mp_constant(cfg, grid).sup;
      CHECK(std::isfinite(ratio));
      CHECK(ratio > 0.0);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  CHECK(hi / lo <= 100.0);
}

TEST_CASE("unweighted p = 2: within [0.01, 100] of Mp = 1, stable under node doubling") {
  const auto a = boyd_norm(standard_operator(0.0, 2.0, 24, 16));
  const auto b = boyd_norm(standard_operator(0.0, 2.0, 24, 32));
  CHECK(a.value >= 0.01);
  CHECK(a.value <= 100.0);
  CHECK(std::abs(b.value - a.value) <= 0.01 * a.value);
}

TEST_CASE("monomial identity") {
  const KernelEvaluator k1(RadialWeight::standard(1.0));
  CHECK(monomial_identity_check(k1, 0, 0.0) <= 1e-12);
  CHECK(monomial_identity_check(k1, 3, 0.5) <= 1e-8);
  for (double alpha : {-0.5, 0.0, 1.0, 3.0}) {
    const KernelEvaluator k(RadialWeight::standard(alpha));
    for (int n = 0; n <= 8; ++n) {
      for (double z : {0.1, -0.5, 0.9}) CHECK(monomial_identity_check(k, n, z) <= 1e-8);
    }
  }
  const KernelEvaluator ke(parse_weight("exp:c=1,kappa=1"));
  CHECK(monomial_identity_check(ke, 2, 0.5) <= 1e-6);
  const KernelEvaluator kt(parse_weight(std::string("file:") + TEST_DATA_DIR +
                                        "/tabulated_weight.csv"));
  for (int n = 0; n <= 8; ++n) {
    CHECK(monomial_identity_check(ke, n, 0.9) <= 1e-6);
    CHECK(monomial_identity_check(kt, n, 0.9) <= 1e-6);
  }
  CHECK_THROWS_AS(monomial_identity_check(k1, 9, 0.5), DomainError);
  CHECK_THROWS_AS(monomial_identity_check(k1, 2, 0.95), DomainError);
}

}  // TEST_SUITE

// Kept in its own suite so its ctest entry isolates it.
TEST_SUITE("grid_stability") {

TEST_CASE("boyd estimate changes by less than 2% from L = 20 to L = 24") {
  for (double alpha : {-0.5, 0.0, 1.0, 3.0}) {
    for (double p : {1.5, 2.0, 3.0}) {
      const double a = boyd_norm(standard_operator(alpha, p, 20)).value;
      const double b = boyd_norm(standard_operator(alpha, p, 24)).value;
      CAPTURE(alpha);
      CAPTURE(p);
      CAPTURE(a);
      CAPTURE(b);
      CHECK(std::abs(b - a) < 0.02 * a);
    }
  }
}

}  // TEST_SUITE

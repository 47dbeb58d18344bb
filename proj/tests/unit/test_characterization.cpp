#include <doctest.h>

#include <cmath>

#include "bergman/characterization.hpp"
#include "bergman/errors.hpp"

using namespace bergman;

namespace {

TripleConfig same(double alpha, double p) {
  const auto w = RadialWeight::standard(alpha);
  return TripleConfig(w, w, w, p);
}

TripleConfig counterexample(const char* exponent = "") {
  const std::string base = "std:alpha=0";
  return TripleConfig(parse_weight(base), parse_weight("cex-nu:base=" + base + ",p=2"),
                      parse_weight("cex-eta:base=" + base + ",p=2" + exponent), 2.0);
}

}  // namespace

TEST_SUITE("characterization") {

TEST_CASE("TripleConfig: conjugate exponent") {
  for (double p : {1.25, 1.5, 2.0, 3.0, 7.0}) {
    const auto cfg = same(0.0, p);
    CHECK(std::abs(1.0 / p + 1.0 / cfg.conjugate() - 1.0) <= 4e-16);
  }
  CHECK(std::isinf(same(0.0, 1.0).conjugate()));
  CHECK_THROWS_AS(same(0.0, 0.5), DomainError);
}

TEST_CASE("growth_verdict: rule") {
  CHECK(growth_verdict({1, 1, 1, 1, 1, 1, 1}, {}) == Verdict::finite);
  CHECK(growth_verdict({1, 1.2, 1.5, 2, 2.6, 3, 4}, {}) == Verdict::diverging);
  CHECK(growth_verdict({1, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6}, {}) == Verdict::inconclusive);
  // slow growth confirmed by the deeper probes
  CHECK(growth_verdict({1, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6}, {2.2, 3.0, 3.5}) == Verdict::diverging);
  CHECK(probe_levels(24) == std::vector<int>{48, 96, 192});
}

TEST_CASE("J_omega: closed forms") {
  CHECK(j_omega(RadialWeight::standard(0.0), 0.0) == 0.0);
  CHECK(j_omega(RadialWeight::standard(0.0), 0.5) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(j_omega(parse_weight("powlog:alpha=1,beta=0"), 0.5) == doctest::Approx(3.0).epsilon(1e-11));
  CHECK(j_omega(RadialWeight::standard(0.0), 0.999) == doctest::Approx(999.0).epsilon(1e-10));
  double prev = 0.0;
  for (double s = 0.05; s < 0.99; s += 0.05) {
    const double j = j_omega(RadialWeight::inverse_log(), s);
    CHECK(j >= prev);
    prev = j;
  }
  CHECK_THROWS_AS(j_omega(RadialWeight::standard(0.0), 1.0), DomainError);
}

TEST_CASE("Mp: solvable triple m(r) = sqrt(r)") {
  const RadialGrid grid(24, 16);
  const auto t = mp_constant(same(0.0, 2.0), grid);
  REQUIRE(t.r.size() == 25);
  CHECK(t.m[0] == 0.0);
  for (std::size_t k = 0; k < t.r.size(); ++k) {
    CAPTURE(k);
    CHECK(t.phi[k] == doctest::Approx(t.r[k] / t.gap[k]).epsilon(1e-9).scale(1e-300));
    CHECK(t.psi[k] == doctest::Approx(t.gap[k]).epsilon(1e-9));
    CHECK(t.m[k] == doctest::Approx(std::sqrt(t.r[k])).epsilon(1e-9).scale(1e-300));
  }
  CHECK(t.sup >= 0.99);
  CHECK(t.sup <= 1.0);
  CHECK(t.verdict == Verdict::finite);
  CHECK(t.measure == "dr");
}

TEST_CASE("Np: solvable triple n(r) = 1") {
  const RadialGrid grid(24, 16);
  const auto t = np_constant(same(0.0, 2.0), grid);
  for (double v : t.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t.sup >= 0.99);
  CHECK(t.sup <= 1.01);
  CHECK(t.verdict == Verdict::finite);
}

TEST_CASE("Np: value at r = 0 against direct quadrature") {
  const RadialGrid grid(20, 16);
  const auto cfg = counterexample();
  const auto t = np_constant(cfg, grid);
  const double psi0 = integrate(
      [&](Radius s) {
        return std::pow(cfg.omega.density(s) / std::sqrt(cfg.nu.density(s)), 2.0);
      },
      Radius{0.0, 1.0}, Radius{1.0, 0.0}).value;
  const double direct = std::sqrt(cfg.eta.tail(0.0)) * std::sqrt(psi0) / cfg.omega.tail(0.0);
  CHECK(t.values[0] == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("Phi/Psi: monotone columns and consistency with direct quadrature") {
  const RadialGrid grid(24, 16);
  const auto w = RadialWeight::standard(0.0);
  const TripleConfig cfg(w, w, RadialWeight::standard(3.0), 2.0);
  const auto t = mp_constant(cfg, grid);
  for (std::size_t k = 1; k < t.r.size(); ++k) {
    CHECK(t.phi[k] >= t.phi[k - 1]);
    CHECK(t.psi[k] <= t.psi[k - 1]);
  }
  // eta / omega_hat^2 = 4 (1-t)(1+t)^3 is integrable up to 1
  auto g = [&](Radius s) {
    return cfg.eta.density(s) / std::pow(cfg.omega.tail(s), 2.0);
  };
  const double total = integrate(g, Radius{0.0, 1.0}, Radius{1.0, 0.0}).value;
  CHECK(total == doctest::Approx(5.2).epsilon(1e-10));
  for (std::size_t k = 0; k < t.r.size(); k += 3) {
    const Radius x{t.r[k], t.gap[k]};
    const double rest = integrate(g, x, Radius{1.0, 0.0}).value;
    CHECK(t.phi[k] + rest == doctest::Approx(total).epsilon(1e-8));
  }
}

TEST_CASE("hypothesis: holds for omega = eta, fails for a fast-decaying eta") {
  const RadialGrid grid(24, 16);
  const auto t = hypothesis_ratio(same(0.0, 2.0), grid);
  CHECK(t.values[0] == 0.0);
  for (std::size_t k = 0; k < t.r.size(); ++k) {
    CHECK(t.values[k] == doctest::Approx(t.r[k]).epsilon(1e-9).scale(1e-300));
  }
  CHECK(t.sup <= 1.0 + 1e-6);
  CHECK(t.verdict == Verdict::finite);

  const auto w = RadialWeight::standard(0.0);
  const TripleConfig bad(w, w, parse_weight("powlog:alpha=3,beta=0"), 2.0);
  CHECK(hypothesis_ratio(bad, grid).verdict == Verdict::diverging);
  const TripleConfig bad_std(w, w, RadialWeight::standard(3.0), 2.0);
  CHECK(hypothesis_ratio(bad_std, grid).verdict == Verdict::diverging);
}

TEST_CASE("counterexample: Np finite while Mp diverges") {
  const RadialGrid grid(24, 16);
  const auto cfg = counterexample();
  CHECK(np_constant(cfg, grid).verdict == Verdict::finite);
  CHECK(mp_constant(cfg, grid).verdict == Verdict::diverging);
}

TEST_CASE("Mp: L = 30 against L = 20 for standard triples") {
  for (double alpha : {0.0, 1.0}) {
    for (double p : {1.5, 2.0, 3.0}) {
      CAPTURE(alpha);
      CAPTURE(p);
      const auto a = mp_constant(same(alpha, p), RadialGrid(20, 16));
      const auto b = mp_constant(same(alpha, p), RadialGrid(30, 16));
      CHECK(a.verdict == Verdict::finite);
      CHECK(b.verdict == Verdict::finite);
      CHECK(std::abs(b.sup - a.sup) < 0.01 * a.sup);
    }
  }
}

TEST_CASE("hypothesis and finite Np imply finite Mp over the shipped triples") {
  const RadialGrid grid(20, 16);
  const double alphas[] = {-0.5, 0.0, 1.0, 3.0};
  for (double a : alphas) {
    for (double b : alphas) {
      for (double p : {1.5, 2.0, 3.0}) {
        const auto w = RadialWeight::standard(a);
        const TripleConfig cfg(w, w, RadialWeight::standard(b), p);
        const auto hyp = hypothesis_ratio(cfg, grid);
        const auto np = np_constant(cfg, grid);
        if (hyp.verdict == Verdict::finite && np.verdict == Verdict::finite) {
          CAPTURE(a);
          CAPTURE(b);
          CAPTURE(p);
          CHECK(mp_constant(cfg, grid).verdict == Verdict::finite);
        }
      }
    }
  }
}

TEST_CASE("p = 1: unweighted inner integral -log(1-r)/r, unbounded") {
  const RadialGrid grid(24, 16);
  const auto t = p1_constant(same(0.0, 1.0), grid);
  CHECK(t.values[0] == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t k = 1; k < t.r.size(); ++k) {
    CHECK(t.values[k] == doctest::Approx(-std::log(t.gap[k]) / t.r[k]).epsilon(1e-8));
  }
  CHECK(t.verdict == Verdict::diverging);
  CHECK(t.measure == "dt");
}

TEST_CASE("p = 1: eta standard alpha = 1 is bounded") {
  const RadialGrid grid(24, 16);
  const auto w = RadialWeight::standard(0.0);
  const TripleConfig cfg(w, w, RadialWeight::standard(1.0), 1.0);
  const auto t = p1_constant(cfg, grid);
  // r = 0: eta_hat(0) / omega_hat(0) = (4/3) / 1
  CHECK(t.values[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(t.verdict == Verdict::finite);
  // 2(1-t^2)/(1-tr) <= 2(1+t), so the inner integral stays below 3
  for (double v : t.values) CHECK(v <= 3.0 + 1e-9);
}

TEST_CASE("necessity lower bound: closed form at t = 0.5") {
  const auto cfg = same(0.0, 2.0);
  CHECK(necessity_lower_bound_at(cfg, 0.0) == 0.0);
  const double t = 0.5;
  const double exact =
      std::sqrt(1.0 / (1.0 - t) + std::log(1.0 - t) - 1.0) * std::sqrt((1.0 - t * t) / 2.0);
  CHECK(necessity_lower_bound_at(cfg, t) == doctest::Approx(exact).epsilon(1e-8));
  CHECK(exact == doctest::Approx(0.33922).epsilon(1e-5));

  const RadialGrid grid(24, 16);
  const auto lb = necessity_lower_bound(cfg, grid);
  const auto mp = mp_constant(cfg, grid);
  CHECK(std::isfinite(lb.sup));
  CHECK(lb.sup <= 10.0 * mp.sup);
  CHECK(lb.values[0] == 0.0);
}

TEST_CASE("test functions") {
  const RadialGrid grid(20, 16);
  SUBCASE("omega = nu gives the indicator of [t, 1)") {
    const auto f = test_function(same(1.0, 2.0), 3.0, 0.5, grid);
    const auto nodes = grid.nodes();
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(f[i] == (nodes[i].r >= 0.5 ? 1.0 : 0.0));
    }
  }
  SUBCASE("omega/nu = 1/(1-r), p = 2, n = 4 caps at r = 3/4") {
    const TripleConfig cfg(RadialWeight::standard(0.0), parse_weight("powlog:alpha=1,beta=0"),
                           RadialWeight::standard(0.0), 2.0);
    for (double r : {0.4, 0.5, 0.6, 0.7, 0.74, 0.76, 0.9, 0.999}) {
      const double want = r < 0.5 ? 0.0 : std::min(4.0, 1.0 / (1.0 - r));
      CHECK(test_function_value(cfg, 4.0, 0.5, Radius::from_r(r)) ==
            doctest::Approx(want).epsilon(1e-14));
    }
    // ||f||^p_{L^p_nu} <= n^{p-1} int_t^1 omega 2s ds
    for (double p : {1.5, 2.0, 3.0}) {
      const TripleConfig c(cfg.omega, cfg.nu, cfg.eta, p);
      const auto f = test_function(c, 4.0, 0.5, grid);
      const auto nodes = grid.nodes();
      const auto w = grid.weights();
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        lhs += std::pow(f[i], p) * c.nu.density(nodes[i]) * 2.0 * nodes[i].r * w[i];
        if (nodes[i].r >= 0.5) rhs += c.omega.density(nodes[i]) * 2.0 * nodes[i].r * w[i];
      }
      CHECK(lhs <= std::pow(4.0, p - 1.0) * rhs * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("nu vanishing where omega > 0 is a domain error") {
  const RadialGrid grid(20, 16);
  const auto nu = RadialWeight::tabulated({0.0, 0.5, 0.9}, {0.0, 0.0, 1.0});
  const auto w = RadialWeight::standard(0.0);
  const TripleConfig cfg(w, nu, w, 2.0);
  CHECK_THROWS_AS(mp_constant(cfg, grid), DomainError);
  CHECK_THROWS_AS(np_constant(cfg, grid), DomainError);
  CHECK_THROWS_AS(test_function(cfg, 2.0, 0.0, grid), DomainError);
  CHECK_THROWS_AS(p1_constant(TripleConfig(w, nu, w, 1.0), grid), DomainError);
}

}  // TEST_SUITE

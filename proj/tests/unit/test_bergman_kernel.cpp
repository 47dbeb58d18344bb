#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "bergman/bergman_kernel.hpp"
#include "bergman/errors.hpp"

using namespace bergman;
using cd = std::complex<double>;

TEST_SUITE("bergman_kernel") {

TEST_CASE("eval: examples") {
  const KernelEvaluator k0(RadialWeight::standard(0.0));
  const KernelEvaluator k1(RadialWeight::standard(1.0));
  CHECK(std::abs(k0.eval(0.0, cd(0.3, -0.4)).value - 1.0) <= 1e-14);
  CHECK(k1.eval(0.5, 0.5).value.real() == doctest::Approx(64.0 / 27.0).epsilon(1e-12));
  const auto v = k0.eval(std::sqrt(0.5), std::sqrt(0.5));
  CHECK(std::abs(v.value - 4.0) <= 1e-10 * 4.0);
  CHECK(v.error_bound < 1e-10);
  CHECK(v.terms > 0);
}

TEST_CASE("eval: domain checks") {
  const KernelEvaluator k(RadialWeight::standard(0.0));
  CHECK_THROWS_AS(k.eval(1.0, 0.5), DomainError);
  CHECK_THROWS_AS(k.eval(0.5, cd(0.0, 1.0)), DomainError);
}

TEST_CASE("eval: closed form (1 - conj(z) zeta)^-(2+alpha) on the 5x5x8 lattice") {
  const double moduli[] = {0.0, 0.3, 0.6, 0.8, 0.9};
  for (double alpha : {0.0, 1.0, 2.0}) {
    const KernelEvaluator k(RadialWeight::standard(alpha));
    double worst = 0.0;
    for (double a : moduli) {
      for (double b : moduli) {
        for (int m = 0; m < 8; ++m) {
          const cd z = std::polar(a, 0.7);
          const cd zeta = std::polar(b, 0.7 + 2.0 * std::numbers::pi * m / 8.0 + 0.1);
          const cd want = std::pow(1.0 - std::conj(z) * zeta, -(2.0 + alpha));
          worst = std::max(worst, std::abs(k.eval(z, zeta).value - want) / std::abs(want));
        }
      }
    }
    CAPTURE(alpha);
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("coefficients: positive, polynomial growth for D-hat weights") {
  for (double alpha : {-0.5, 0.0, 1.0, 3.0}) {
    const KernelEvaluator k(RadialWeight::standard(alpha));
    CHECK(k.accurate());
    // a_n ~ n^{1+alpha} / Gamma(2+alpha)
    CHECK(k.growth_slope() == doctest::Approx(1.0 + alpha).epsilon(0.02));
    for (long n : {0L, 1L, 10L, 511L, 512L, 513L, 100000L, 4000000L}) {
      CHECK(k.coefficient(n) > 0.0);
    }
    // interpolated coefficients beyond the direct range against the exact
    // Gamma-ratio 1/(2 omega_{2n+1}) = Gamma(n+2+alpha)/(Gamma(n+1) Gamma(2+alpha))
    for (long n : {600L, 5000L, 123456L}) {
      const double exact = std::lgamma(n + 2.0 + alpha) - std::lgamma(n + 1.0) -
                           std::lgamma(2.0 + alpha);
      CAPTURE(n);
      CHECK(std::abs(k.log_coefficient(n) - exact) <= 1e-9);
    }
  }
  const KernelEvaluator ke(parse_weight("exp:c=1,kappa=1"));
  CHECK_FALSE(ke.accurate());
  CHECK(ke.term_budget() == 65536);
}

TEST_CASE("circle_mean: examples") {
  const KernelEvaluator k0(RadialWeight::standard(0.0));
  for (double p : {0.5, 1.0, 2.0, 3.0}) {
    CHECK(circle_mean(k0, p, 0.0) == doctest::Approx(k0.coefficient(0)).epsilon(1e-14));
  }
  CHECK(circle_mean(k0, 1.0, 0.5) == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
  CHECK(circle_mean(k0, 2.0, 0.5) ==
        doctest::Approx(std::sqrt(1.25 / (0.75 * 0.75 * 0.75))).epsilon(1e-9));
  // phi_1 = 1/(1-x^2) for the unweighted kernel, also close to the boundary
  for (int level : {4, 10, 14, 17}) {
    const Radius x = Radius::knot(level);
    const double exact = 1.0 / (x.gap * (1.0 + x.r));
    CHECK(circle_mean(k0, 1.0, x) == doctest::Approx(exact).epsilon(1e-8));
  }
}

TEST_CASE("circle_mean: Parseval consistency at 20 random x") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> level(0.0, 16.0);
  for (double alpha : {0.0, 1.5}) {
    const KernelEvaluator k(RadialWeight::standard(alpha));
    for (int i = 0; i < 20; ++i) {
      const Radius x = Radius::from_gap(std::exp2(-level(rng)));
      CAPTURE(x.gap);
      CHECK(circle_mean(k, 2.0, x) ==
            doctest::Approx(circle_mean_parseval(k, x)).epsilon(1e-9));
    }
  }
  const KernelEvaluator kl(parse_weight("powlog:alpha=0.5,beta=1"));
  for (int i = 0; i < 20; ++i) {
    const Radius x = Radius::from_gap(std::exp2(-level(rng)));
    CHECK(circle_mean(kl, 2.0, x) == doctest::Approx(circle_mean_parseval(kl, x)).epsilon(1e-9));
  }
}

TEST_CASE("circle_mean: nondecreasing in x for shipped weights") {
  for (const char* spec : {"std:alpha=-0.5", "std:alpha=0", "std:alpha=3",
                           "powlog:alpha=0.5,beta=1", "invlog:", "exp:c=1,kappa=1"}) {
    const KernelEvaluator k(parse_weight(spec));
    const double top = k.accurate() ? 14.0 : 6.0;
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      double prev = 0.0;
      for (double t = 0.0; t <= top; t += 0.25) {
        const double v = circle_mean(k, p, Radius::from_gap(std::exp2(-t)));
        CAPTURE(spec);
        CAPTURE(p);
        CAPTURE(t);
        CHECK(v >= prev * (1.0 - 1e-9));
        prev = v;
      }
    }
  }
}

TEST_CASE("MeanTable: invariants and agreement with direct means") {
  const KernelEvaluator k(RadialWeight::standard(1.0));
  const MeanTable table(k, 1.0);
  CHECK(table.value(0.0) == doctest::Approx(k.coefficient(0)).epsilon(1e-12));
  double prev = 0.0;
  for (double t = 0.0; t <= 29.5; t += 0.125) {
    const Radius x = Radius::from_gap(std::exp2(-t));
    REQUIRE(table.covers(x));
    const double v = table.value(x);
    CHECK(v >= prev);
    prev = v;
    if (t <= 14.0) {
      CHECK_FALSE(table.extrapolated(x));
      CHECK(v == doctest::Approx(circle_mean(k, 1.0, x)).epsilon(1e-6));
    }
  }
  CHECK(table.extrapolated(Radius::knot(20)));
  CHECK_FALSE(table.covers(Radius::knot(31)));
}

TEST_CASE("kernel_norm: examples") {
  const KernelEvaluator k0(RadialWeight::standard(0.0));
  const auto nu = RadialWeight::standard(0.0);
  // a = 0: a_0 ||1||
  CHECK(kernel_norm(k0, nu, 2.0, Radius::from_r(0.0)) == doctest::Approx(1.0).epsilon(1e-10));
  const auto nu1 = RadialWeight::standard(1.0);
  CHECK(kernel_norm(k0, nu1, 3.0, Radius::from_r(0.0)) ==
        doctest::Approx(std::cbrt(2.0 * nu1.moment(1.0))).epsilon(1e-10));
  // reproducing property ||B_a||^2 = B_a(a); the mean table interpolates
  // between its knots, good to about 1e-6
  const double n2 = std::pow(kernel_norm(k0, nu, 2.0, Radius::from_r(0.9)), 2);
  CHECK(n2 == doctest::Approx(1.0 / std::pow(1.0 - 0.81, 2)).epsilon(1e-6));
  const double ratio = n2 / 49.5;
  CHECK(ratio >= 0.1);
  CHECK(ratio <= 10.0);
}

TEST_CASE("ratio sweep: examples and bounded spread") {
  const KernelEvaluator k0(RadialWeight::standard(0.0));
  const auto s = theorem_a_ratio_sweep(k0, RadialWeight::standard(0.0), 2.0, {0.9, 0.99, 0.999});
  for (const auto& row : s.rows) {
    CHECK(std::isfinite(row.mean_ratio));
    CHECK(std::isfinite(row.norm_ratio));
  }
  CHECK(s.mean_spread <= 10.0);
  CHECK(s.norm_spread <= 10.0);

  const KernelEvaluator k1(RadialWeight::standard(1.0));
  const auto s1 = theorem_a_ratio_sweep(k1, RadialWeight::standard(1.0), 1.0, {0.9, 0.99});
  for (const auto& row : s1.rows) {
    CHECK(row.mean_ratio > 0.0);
    CHECK(row.norm_ratio > 0.0);
  }
  CHECK(s1.mean_spread <= 10.0);
  CHECK(s1.norm_spread <= 10.0);

  CHECK_THROWS_AS(theorem_a_ratio_sweep(k0, RadialWeight::standard(0.0), 2.0, {0.3, 0.9}),
                  DomainError);

  for (double alpha : {-0.5, 0.0, 1.0, 3.0}) {
    const KernelEvaluator k(RadialWeight::standard(alpha));
    for (double p : {1.0, 2.0}) {
      const auto sw = theorem_a_ratio_sweep(k, RadialWeight::standard(alpha), p,
                                            {0.9, 0.99, 0.999, 0.9999});
      CAPTURE(alpha);
      CAPTURE(p);
      CHECK(sw.mean_spread <= 10.0);
      CHECK(sw.norm_spread <= 10.0);
    }
  }
}

}  // TEST_SUITE

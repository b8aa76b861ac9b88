#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rfdyn/poisson.hpp"
#include "rfdyn/rational.hpp"
#include "rfdyn/stats.hpp"

#include <cmath>
#include <complex>
#include <numbers>

using namespace rfdyn;

namespace {

double choose(int n, int k) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)); }

// E|(1-a) + a e^{iX}|^{2l} through the Fourier coefficients rho^{|k|}.
double F_series(int ell, double r, double alpha) {
    double rho = std::sqrt(r), total = 0.0;
    for (int a = 0; a <= ell; ++a)
        for (int b = 0; b <= ell; ++b)
            total += choose(ell, a) * choose(ell, b) * std::pow(alpha, a + b) * std::pow(1 - alpha, 2 * ell - a - b) *
                     std::pow(rho, std::abs(a - b));
    return total;
}

}  // namespace

TEST_CASE("kernel density") {
    for (double rho : {0.2, 0.5, 0.9}) {
        CHECK(kernel_density(rho, 0.0) == doctest::Approx((1 + rho) / ((1 - rho) * 2 * std::numbers::pi)));
        double mass = integrate([&](double t) { return kernel_density(rho, t); }, -std::numbers::pi, std::numbers::pi,
                                1e-14);
        CHECK(std::abs(mass - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(kernel_density(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(kernel_density(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("Fourier coefficients") {
    for (double rho : {0.3, 0.5, 0.7, std::sqrt(0.5)})
        for (int k = 0; k <= 10; ++k) CHECK(std::abs(kernel_fourier_coefficient(rho, k) - std::pow(rho, k)) < 1e-10);
}

TEST_CASE("kernel sampling") {
    Rng rng = make_rng(1, 0);
    const double rho = 0.6;
    const int n = 1000000;
    std::vector<double> c1(n), c2(n), s2(n);
    for (int i = 0; i < n; ++i) {
        double t = sample_kernel(rho, rng);
        REQUIRE(t >= -std::numbers::pi);
        REQUIRE(t <= std::numbers::pi);
        c1[static_cast<std::size_t>(i)] = std::cos(t);
        c2[static_cast<std::size_t>(i)] = std::cos(2 * t);
        s2[static_cast<std::size_t>(i)] = std::sin(2 * t);
    }
    auto e1 = estimate(c1), e2 = estimate(c2), e3 = estimate(s2);
    CHECK(std::abs(e1.mean - rho) < 4 * e1.se);
    CHECK(std::abs(e2.mean - rho * rho) < 4 * e2.se);
    CHECK(std::abs(e3.mean) < 4 * e3.se);
}

TEST_CASE("F functional") {
    for (long ell : {0L, 1L, 5L, 40L}) {
        CHECK(F_functional(ell, 0.3, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(F_functional(ell, 0.3, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(std::abs(F_functional(3, 0.25, 0.4) - F_series(3, 0.25, 0.4)) < 1e-10);
    for (int ell : {1, 2, 7, 12})
        for (double r : {0.1, 0.5, 0.8})
            for (double a : {0.2, 0.5, 0.9}) CHECK(std::abs(F_functional(ell, r, a) - F_series(ell, r, a)) < 1e-10);
    CHECK_THROWS_AS(F_functional(2, 0.3, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(F_functional(-1, 0.3, 0.5), std::invalid_argument);
}

TEST_CASE("L functional") {
    std::vector<double> u3(3, 1.0 / 3.0);
    CHECK(L_functional(0, 3, 0.5, u3).value == doctest::Approx(1.0));
    CHECK(L_functional(7, 1, 0.5, {1.0}).value == doctest::Approx(1.0));
    CHECK(std::abs(L_functional(3, 3, 0.5, u3).value - std::pow(2.0, -3.0) * min_multinomial_exact(3, 3, u3, 2.0)) <
          1e-8);
    // d = 2 against the F functional: |p1 + p2 e^{i(T2 - T1)}|, the difference of two kernel angles
    // has parameter r, i.e. F evaluated at r^2.
    std::vector<double> p{0.3, 0.7};
    CHECK(L_functional(4, 2, 0.5, p).value == doctest::Approx(F_functional(4, 0.25, 0.7)).epsilon(1e-10));

    LOptions mc;
    mc.max_quadrature_dim = 2;
    mc.mc_samples = 200000;
    mc.seed = 3;
    auto est = L_functional(3, 3, 0.5, u3, mc);
    CHECK(est.monte_carlo);
    CHECK(est.se > 0);
    CHECK(std::abs(est.value - L_functional(3, 3, 0.5, u3).value) < 4 * est.se);

    mc.threads = 3;
    CHECK(L_functional(3, 3, 0.5, u3, mc).value == est.value);

    CHECK_THROWS_AS(L_functional(3, 3, 0.5, {0.5, 0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(L_functional(3, 2, 0.5, u3), std::invalid_argument);
}

TEST_CASE("min-multinomial identity in corrected form") {
    for (long ell = 1; ell <= 6; ++ell)
        for (int d = 2; d <= 4; ++d) {
            std::vector<double> p(static_cast<std::size_t>(d));
            double tot = 0.0;
            for (int j = 0; j < d; ++j) tot += (p[static_cast<std::size_t>(j)] = 1.0 + j);
            for (auto& x : p) x /= tot;
            for (double r : {0.5, 0.3}) {
                double L = L_functional(ell, d, r, p).value;
                CHECK(std::abs(min_multinomial_exact(ell, d, p, 1.0 / r) - std::pow(r, -double(ell)) * L) < 1e-8);
                // Equivalent l1 form E[sqrt(r)^{||N - N'||_1}] = L.
                CHECK(std::abs(l1_damping_exact(ell, d, p, std::sqrt(r)) - L) < 1e-9);
            }
        }
}

TEST_CASE("min-multinomial identity as literally displayed does not hold") {
    // l = 1, d = 2, p = (1/2, 1/2): E[r^{sum min}] = (1 + r)/2, r L = r (1 + r)/2.
    std::vector<double> p{0.5, 0.5};
    double r = 0.5;
    double lhs = min_multinomial_exact(1, 2, p, r);
    CHECK(lhs == doctest::Approx((1 + r) / 2));
    CHECK(std::abs(lhs - r * L_functional(1, 2, r, p).value) > 0.1);
}

TEST_CASE("binomial pgf") {
    CHECK(std::abs(binom_pgf(5, 0.3, {1.0, 0.0}) - std::complex<double>(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(binom_pgf(5, 0.0, {0.2, 0.7}) - std::complex<double>(1.0, 0.0)) < 1e-15);
    double brute = 0.0;
    for (int k = 0; k <= 2; ++k) brute += choose(2, k) * 0.25 * std::pow(0.5, k);
    CHECK(brute == doctest::Approx(9.0 / 16.0));
    CHECK(std::abs(binom_pgf(2, 0.5, {0.5, 0.0}) - std::complex<double>(9.0 / 16.0, 0.0)) < 1e-15);
}

TEST_CASE("max-binomial functional") {
    CHECK(max_binomial_exact(6, 0.0, 0.3).enumeration == doctest::Approx(1.0));
    CHECK(max_binomial_exact(6, 1.0, 0.3).enumeration == doctest::Approx(std::pow(0.3, 6)));
    auto v = max_binomial_exact(4, 0.3, 0.25);
    CHECK(std::abs(v.enumeration - v.closed_form) < 1e-10);
    for (long ell = 1; ell <= 8; ++ell)
        for (double p : {0.2, 0.5, 0.8})
            for (double r : {0.25, 0.5, std::pow(2.0, -2.0 / 3.0)}) {
                auto w = max_binomial_exact(ell, p, r);
                CHECK(std::abs(w.enumeration - w.closed_form) < 1e-10);
            }
    CHECK_THROWS_AS(max_binomial_exact(2001, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("multinomial enumeration oracles") {
    std::vector<double> e1{1.0, 0.0, 0.0};
    CHECK(min_multinomial_exact(4, 3, e1, 0.5) == doctest::Approx(std::pow(0.5, 4)));
    std::vector<double> p{0.2, 0.3, 0.5}, q{0.5, 0.2, 0.3};
    CHECK(min_multinomial_exact(5, 3, p, 0.7) == doctest::Approx(min_multinomial_exact(5, 3, q, 0.7)).epsilon(1e-13));
    auto t = multinomial_table(4, 3, p);
    CHECK(t.outcomes.size() == 15);
    double tot = 0.0;
    for (double x : t.pmf) tot += x;
    CHECK(tot == doctest::Approx(1.0));
    std::vector<double> u(10, 0.1);
    CHECK_THROWS_AS(multinomial_table(40, 10, u), SizeError);
    CHECK_THROWS_AS(min_multinomial_exact(40, 10, u, 2.0), SizeError);
}

TEST_CASE("l1 product representation by Monte Carlo") {
    std::vector<double> p{0.5, 0.3, 0.2};
    const double rho = 0.6;
    const long ell = 3;
    Rng rng = make_rng(5, 0);
    const int n = 200000;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        std::complex<double> z = 0.0;
        for (double pj : p) z += pj * std::polar(1.0, sample_kernel(rho, rng));
        xs[static_cast<std::size_t>(i)] = std::pow(std::norm(z), static_cast<double>(ell));
    }
    auto e = estimate(xs);
    CHECK(std::abs(e.mean - l1_damping_exact(ell, 3, p, rho)) < 4 * e.se);
}

TEST_CASE("quadrature helpers") {
    auto g = gauss_legendre(16);
    double sum = 0.0;
    for (double w : g.w) sum += w;
    CHECK(sum == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0, 1e-14) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / std::sqrt(std::abs(x - 0.3)); }, 0.0, 1.0, 1e-14, 2, 8),
                    QuadratureError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rfdyn/bellman.hpp"
#include "rfdyn/risk.hpp"

#include <cmath>

using namespace rfdyn;

TEST_CASE("identical trees when the policy is forced") {
    auto model = ModelConfig::make(3, 1, 3);
    auto f = estimate_functionals(model, PolicySpec::greedy(), 5, 1000, 1);
    CHECK(f.single_tree_bias.mean == f.cross_tree_bias.mean);
    CHECK(f.single_tree_bias.mean == doctest::Approx(std::pow(4.0, -5.0)));
    CHECK(f.overlap.mean == 1.0);
    CHECK(f.pairs == 1000);
    CHECK_THROWS_AS(estimate_functionals(model, PolicySpec::greedy(), 5, 999, 1), std::invalid_argument);
}

TEST_CASE("single-tree bias matches the exact terminal law on the counterexample config") {
    auto model = ModelConfig::make(6, 2, 4);
    auto f = estimate_functionals(model, PolicySpec::greedy(), 2, 50000, 2);
    auto law = terminal_law_exact(model, PolicySpec::greedy(), 2);
    auto obj = default_objective(model, 2, 1);
    double exact = objective_J(law, obj).get_d();
    CHECK(std::abs(f.single_tree_bias.mean - exact) < 3 * f.single_tree_bias.se);
}

TEST_CASE("single-tree bias scales with beta squared") {
    auto a = ModelConfig::make(8, 3, 4, {1.0, 0.5, 2.0});
    auto b = ModelConfig::make(8, 3, 4, {2.0, 1.0, 4.0});
    auto fa = estimate_functionals(a, PolicySpec::mix(0.5), 6, 2000, 3);
    auto fb = estimate_functionals(b, PolicySpec::mix(0.5), 6, 2000, 3);
    CHECK(fb.single_tree_bias.mean == 4.0 * fa.single_tree_bias.mean);
    CHECK(fb.cross_tree_bias.mean == 4.0 * fa.cross_tree_bias.mean);
    CHECK(fb.overlap.mean == fa.overlap.mean);
}

TEST_CASE("functional invariants") {
    for (const auto& pol : {PolicySpec::greedy(), PolicySpec::exploratory()}) {
        auto model = ModelConfig::make(10, 3, 5);
        double prev = 1e300;
        for (std::int64_t ell : {2, 4, 8, 12}) {
            auto f = estimate_functionals(model, pol, ell, 4000, 4);
            CHECK(f.cross_tree_bias.mean <= f.single_tree_bias.mean + 4 * f.single_tree_bias.se);
            CHECK(f.overlap.mean >= 0.0);
            CHECK(f.overlap.mean <= 1.0);
            CHECK(f.single_tree_bias.mean < prev);
            prev = f.single_tree_bias.mean;
        }
    }
}

TEST_CASE("results do not depend on the worker count") {
    auto model = ModelConfig::make(8, 2, 4);
    auto a = estimate_functionals(model, PolicySpec::exploratory(), 6, 3000, 5, 1);
    auto b = estimate_functionals(model, PolicySpec::exploratory(), 6, 3000, 5, 3);
    CHECK(a.single_tree_bias.mean == b.single_tree_bias.mean);
    CHECK(a.overlap.mean == b.overlap.mean);
}

TEST_CASE("exploratory closed forms") {
    auto model = ModelConfig::make(8, 2, 4);
    const std::int64_t ell = 5;
    auto f = estimate_functionals(model, PolicySpec::exploratory(), ell, 40000, 6);
    double q = opportunity_rate(8, 2, 4).get_d(), ps = q / 2;
    double single = 2 * std::pow(1 - 0.75 * ps, double(ell));
    CHECK(std::abs(f.single_tree_bias.mean - single) < 4 * f.single_tree_bias.se);
    double cross = 2 * max_binomial_exact(ell, ps, 0.25).enumeration;
    CHECK(std::abs(f.cross_tree_bias.mean - cross) < 4 * f.cross_tree_bias.se);
    auto pi = allocation_target(8, 2, 4);
    double overlap = min_multinomial_exact(ell, 8, pi, 2.0) / std::pow(2.0, double(ell));
    CHECK(std::abs(f.overlap.mean - overlap) < 4 * f.overlap.se);
    CHECK(std::abs(f.overlap.mean - l1_damping_exact(ell, 8, pi, std::sqrt(0.5))) < 4 * f.overlap.se);
}

TEST_CASE("CART bound terms") {
    auto one = cart_bound_terms(ModelConfig::make(3, 1, 3), 4, 10, 100);
    CHECK(one.q == 1.0);
    CHECK(one.bias1 == doctest::Approx(std::pow(4.0, -4.0)));

    auto t = cart_bound_terms(ModelConfig::make(6, 2, 4), 3, 10, 500);
    CHECK(t.kind == "cart");
    CHECK(t.bias1 == doctest::Approx(std::pow(8.0 / 15.0, 3.0)));
    CHECK(t.F_alpha > 0.0);
    CHECK(t.F_alpha < 1.0);
    CHECK(t.F_r == doctest::Approx(0.5));
    CHECK(t.pi.size() == 5);
    CHECK(t.pi[0] == doctest::Approx(14.0 / 15.0));
    CHECK(t.L_r == 0.5);
    CHECK(t.remainder == doctest::Approx(std::pow(1 - 1.0 / 8, 500)));
    CHECK(t.varterm == doctest::Approx(8.0 / 500.0 * t.L.value));
    for (double x : {t.bias1, t.bias2, t.bias2_prefactor, t.F_value, t.remainder, t.L.value}) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
    CHECK(t.etareq_applicable);
    CHECK(t.etareq_passes == check_etareq(6, 2, 4).passes);
}

TEST_CASE("benchmark bound terms") {
    auto model = ModelConfig::make(6, 2, 4);
    auto t = benchmark_bound_terms(model, 3, 10, 500);
    double q = 14.0 / 15.0;
    CHECK(t.kind == "benchmark");
    CHECK(t.bias1 == doctest::Approx(std::pow(1 - 3 * q / 8, 3.0)));
    CHECK(t.F_alpha == doctest::Approx(q / (4 - q)));
    CHECK(t.F_r == 0.25);
    CHECK(t.pi.size() == 6);
    // Benchmark L decays faster in l than the CART one when s >= 2.
    auto c8 = cart_bound_terms(model, 8, 10, 500), c16 = cart_bound_terms(model, 16, 10, 500);
    auto b8 = benchmark_bound_terms(model, 8, 10, 500), b16 = benchmark_bound_terms(model, 16, 10, 500);
    CHECK(b16.L.value / b8.L.value < c16.L.value / c8.L.value);
}

TEST_CASE("equilibrium replacement ratios") {
    auto forced = ModelConfig::make(4, 1, 4);
    auto r1 = equilibrium_replacement_ratio(forced, PolicySpec::greedy(), {1, 3, 6}, 200, 7);
    for (const auto& row : r1.rows) CHECK(row.ratio == doctest::Approx(1.0).epsilon(1e-14));

    auto s1 = ModelConfig::make(6, 1, 2);
    auto r2 = equilibrium_replacement_ratio(s1, PolicySpec::greedy(), {2, 5, 9}, 20000, 8);
    for (const auto& row : r2.rows) CHECK(std::abs(row.ratio - 1.0) < 4 * row.ratio_se);

    auto model = ModelConfig::make(10, 2, 8);
    std::vector<std::int64_t> grid;
    for (std::int64_t l = 2; l <= 20; ++l) grid.push_back(l);
    auto g = equilibrium_replacement_ratio(model, PolicySpec::greedy(), grid, 20000, 9);
    CHECK(g.etareq_passes);
    CHECK_FALSE(g.benchmark_reference);
    for (const auto& row : g.rows) {
        CHECK(row.ratio >= 0.2);
        CHECK(row.ratio <= 5.0);
    }
    auto e = equilibrium_replacement_ratio(model, PolicySpec::exploratory(), grid, 20000, 9);
    CHECK(e.benchmark_reference);
    for (const auto& row : e.rows) {
        CHECK(row.ratio >= 0.2);
        CHECK(row.ratio <= 5.0);
        CHECK(std::abs(row.ratio - 1.0) < 4 * row.ratio_se);
    }
}

#include "rfdyn/risk.hpp"
#include "rfdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfdyn {

RiskFunctionals estimate_functionals(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell,
                                     std::size_t reps, std::uint64_t seed, unsigned threads) {
    if (reps < 1000) throw std::invalid_argument("estimate_functionals: reps must be >= 1000");
    if (ell < 0) throw std::invalid_argument("estimate_functionals: l must be >= 0");
    model.validate();
    std::vector<double> b2(static_cast<std::size_t>(model.s));
    for (int j = 0; j < model.s; ++j) b2[static_cast<std::size_t>(j)] = model.beta[static_cast<std::size_t>(j)] * model.beta[static_cast<std::size_t>(j)];
    std::vector<double> single(reps), cross(reps), overlap(reps);
    parallel_for(reps, threads, [&](std::size_t i) {
        Rng mask1 = make_rng(seed, 4 * i), mask2 = make_rng(seed, 4 * i + 1);
        Rng choice1 = make_rng(seed, 4 * i + 2), choice2 = make_rng(seed, 4 * i + 3);
        auto t1 = run_branch(model, policy, ell, mask1, choice1);
        auto t2 = run_branch(model, policy, ell, mask2, choice2);
        const auto& n = t1.counts.back();
        const auto& m = t2.counts.back();
        double s1 = 0.0, s2 = 0.0, c = 0.0;
        for (int j = 0; j < model.s; ++j) {
            auto a = n[static_cast<std::size_t>(j)], b = m[static_cast<std::size_t>(j)];
            s1 += b2[static_cast<std::size_t>(j)] * std::ldexp(1.0, static_cast<int>(-2 * a));
            s2 += b2[static_cast<std::size_t>(j)] * std::ldexp(1.0, static_cast<int>(-2 * b));
            c += b2[static_cast<std::size_t>(j)] * std::ldexp(1.0, static_cast<int>(-2 * std::max(a, b)));
        }
        std::int64_t dist = 0;
        for (int j = 0; j < model.d; ++j) dist += std::abs(n[static_cast<std::size_t>(j)] - m[static_cast<std::size_t>(j)]);
        single[i] = 0.5 * (s1 + s2);
        cross[i] = c;
        overlap[i] = std::exp2(-0.5 * static_cast<double>(dist));
    });
    RiskFunctionals out;
    out.single_tree_bias = estimate(single);
    out.cross_tree_bias = estimate(cross);
    out.overlap = estimate(overlap);
    out.pairs = reps;
    return out;
}

namespace {

void fill_common(BoundTerms& t, const ModelConfig& model, std::int64_t ell, long B, long n0) {
    model.validate();
    if (ell < 0) throw std::invalid_argument("bound terms: l must be >= 0");
    if (B < 1 || n0 < 1) throw std::invalid_argument("bound terms: B and n0 must be >= 1");
    t.q = opportunity_rate(model.d, model.s, model.m).get_d();
    t.ell = ell;
    t.B = B;
    t.n0 = n0;
    t.remainder = std::pow(1.0 - std::exp2(-static_cast<double>(ell)), static_cast<double>(n0));
    t.etareq_applicable = model.s >= 2;
    t.etareq_passes = model.s < 2 || check_etareq(model.d, model.s, model.m).passes;
}

void fill_variance(BoundTerms& t, const LOptions& opts) {
    t.L = L_functional(t.ell, static_cast<int>(t.pi.size()), t.L_r, t.pi, opts);
    t.varterm = std::exp2(static_cast<double>(t.ell)) / static_cast<double>(t.n0) * t.L.value;
}

}  // namespace

BoundTerms cart_bound_terms(const ModelConfig& model, std::int64_t ell, long B, long n0, const LOptions& opts) {
    BoundTerms t;
    t.kind = "cart";
    fill_common(t, model, ell, B, n0);
    const double q = t.q, s = model.s, l = static_cast<double>(ell);
    t.bias1 = std::pow(1.0 - q + q * std::pow(4.0, -1.0 / s), l);
    const double h = std::pow(2.0, -1.0 / s);
    t.bias2_prefactor = std::pow(1.0 - q + q * h, 2.0 * l);
    t.F_r = std::pow(2.0, -2.0 / s);
    t.F_alpha = q * h / (1.0 - q + q * h);
    t.F_value = F_functional(ell, t.F_r, t.F_alpha);
    t.bias2 = t.bias2_prefactor * t.F_value;
    t.pi.assign(static_cast<std::size_t>(model.d - model.s + 1), 0.0);
    t.pi[0] = q;
    for (std::size_t j = 1; j < t.pi.size(); ++j) t.pi[j] = (1.0 - q) / (model.d - model.s);
    fill_variance(t, opts);
    return t;
}

BoundTerms benchmark_bound_terms(const ModelConfig& model, std::int64_t ell, long B, long n0, const LOptions& opts) {
    BoundTerms t;
    t.kind = "benchmark";
    fill_common(t, model, ell, B, n0);
    const double q = t.q, s = model.s, l = static_cast<double>(ell);
    t.bias1 = std::pow(1.0 - 3.0 * q / (4.0 * s), l);
    t.bias2_prefactor = std::pow(1.0 - q / (2.0 * s), 2.0 * l);
    t.F_r = 0.25;
    t.F_alpha = q / (2.0 * s - q);
    t.F_value = F_functional(ell, t.F_r, t.F_alpha);
    t.bias2 = t.bias2_prefactor * t.F_value;
    t.pi = allocation_target(model.d, model.s, model.m);
    fill_variance(t, opts);
    return t;
}

ReplacementReport equilibrium_replacement_ratio(const ModelConfig& model, const PolicySpec& policy,
                                                const std::vector<std::int64_t>& ell_grid, std::size_t reps,
                                                std::uint64_t seed, unsigned threads) {
    model.validate();
    if (ell_grid.empty() || !std::is_sorted(ell_grid.begin(), ell_grid.end()) || ell_grid.front() < 0)
        throw std::invalid_argument("equilibrium_replacement_ratio: grid must be nonempty, sorted, nonnegative");
    if (reps < 1) throw std::invalid_argument("equilibrium_replacement_ratio: reps must be >= 1");
    ReplacementReport rep;
    rep.benchmark_reference = policy.kind == PolicyKind::Exploratory;
    rep.etareq_applicable = model.s >= 2;
    rep.etareq_passes = model.s < 2 || check_etareq(model.d, model.s, model.m).passes;
    const double q = opportunity_rate(model.d, model.s, model.m).get_d();
    const std::int64_t lmax = ell_grid.back();
    const std::size_t g = ell_grid.size();
    std::vector<double> vals(g * reps);
    parallel_for(reps, threads, [&](std::size_t r) {
        Rng rng = make_rng(seed, r);
        auto tr = run_branch(model, policy, lmax, rng);
        for (std::size_t k = 0; k < g; ++k) {
            const auto& n = tr.counts[static_cast<std::size_t>(ell_grid[k])];
            double acc = 0.0;
            for (int j = 0; j < model.s; ++j) acc += std::ldexp(1.0, static_cast<int>(-2 * n[static_cast<std::size_t>(j)]));
            vals[k * reps + r] = acc / model.s;
        }
    });
    for (std::size_t k = 0; k < g; ++k) {
        ReplacementRow row;
        row.ell = ell_grid[k];
        row.moment = estimate(std::span<const double>(vals.data() + k * reps, reps));
        const double l = static_cast<double>(row.ell), s = model.s;
        row.reference = rep.benchmark_reference ? std::pow(1.0 - 3.0 * q / (4.0 * s), l)
                                                : std::pow(1.0 - q + q * std::pow(4.0, -1.0 / s), l);
        row.ratio = row.moment.mean / row.reference;
        row.ratio_se = row.moment.se / row.reference;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace rfdyn

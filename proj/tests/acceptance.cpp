// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any line fails.

#include "rfdyn/bellman.hpp"
#include "rfdyn/dynamics.hpp"
#include "rfdyn/environment.hpp"
#include "rfdyn/forest.hpp"
#include "rfdyn/poisson.hpp"
#include "rfdyn/risk.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

using namespace rfdyn;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void run(const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = secs < limit_seconds;
    bool ok = o.pass && in_time;
    if (!ok) ++failures;
    std::ostringstream line;
    line << (ok ? "PASS " : "FAIL ") << name << " [" << std::fixed;
    line.precision(2);
    line << secs << "s / limit " << limit_seconds << "s" << (in_time ? "" : ", over time") << "] " << o.detail;
    std::cout << line.str() << std::endl;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Outcome counterexample() {
    std::ostringstream msg;
    bool ok = true;
    auto r = reproduce_counterexample(15, frac(1, 100));

    const std::map<State, Rational> expected{{{0, 0}, frac(1, 225)},   {{1, 0}, frac(14, 225)},
                                             {{0, 1}, frac(14, 225)},  {{2, 0}, frac(28, 225)},
                                             {{0, 2}, frac(28, 225)},  {{1, 1}, frac(140, 225)}};
    bool table = r.eta_greedy.support.size() == expected.size();
    for (const auto& [st, mass] : expected) table = table && r.eta_greedy.mass_of(st) == mass;
    msg << "eta_gr table " << (table ? "exact" : "MISMATCH");
    ok = ok && table;

    bool gammas = true, signs = true;
    for (long B = 2; B <= 30; ++B) {
        auto rb = reproduce_counterexample(B, frac(1, 100));
        Rational formula = frac(29 - 2 * B, 48 * B);
        gammas = gammas && rb.gamma_difference == formula;
        signs = signs && (B >= 15 ? rb.gamma_difference < 0 : rb.gamma_difference > 0);
    }
    msg << "; Gamma(a)-Gamma(b) = (29-2B)/(48B) for B=2..30: " << (gammas ? "yes" : "NO")
        << "; sign flip at 15: " << (signs ? "yes" : "NO");
    ok = ok && gammas && signs;

    Rational theta = frac(1, 100) * frac(14, 75);
    Rational expansion = theta * frac(-1, 720) + theta * theta * frac(14, 15) * frac(15, 16);
    bool matches = r.delta_J == expansion && r.delta_J == r.delta_J_shifted_law;
    bool negative = r.delta_J < 0;
    msg << "; dJ(B=15, eps=1/100) = " << to_string(r.delta_J) << " (" << num(r.delta_J.get_d()) << ")"
        << ", equals expansion: " << (matches ? "yes" : "NO") << ", negative: " << (negative ? "yes" : "NO");
    if (!negative) {
        Rational eps_star = frac(1, 720) / (frac(14, 16) * frac(14, 75));
        msg << " (expansion is negative only for eps < " << to_string(eps_star) << " ~ " << num(eps_star.get_d())
            << ")";
    }
    ok = ok && matches && negative;
    return {ok, msg.str()};
}

Outcome dp_vs_bruteforce() {
    auto model = ModelConfig::make(3, 2, 2);
    auto space = StateSpace::InformativeReduced;
    auto obj = default_objective(model, 2, 1);
    auto table = bellman_backward(model, obj.phi, 2, space);
    Rational v0 = table.value(0, zero_state(model, space));
    auto search = brute_force_policy_search(model, obj, 2, space);
    bool ok = v0 == search.best_value;
    return {ok, "V0(0) = " + to_string(v0) + ", enumeration min = " + to_string(search.best_value) + " over " +
                    std::to_string(search.policies) + " policies"};
}

Outcome poisson_identities() {
    double mb = 0.0;
    for (long ell = 1; ell <= 8; ++ell)
        for (double p : {0.2, 0.5, 0.8})
            for (double r : {0.25, std::pow(2.0, -2.0 / 2.0), std::pow(2.0, -2.0 / 3.0)}) {
                auto v = max_binomial_exact(ell, p, r);
                mb = std::max(mb, std::abs(v.enumeration - v.closed_form));
            }
    double mm = 0.0;
    for (long ell = 1; ell <= 6; ++ell)
        for (int d = 2; d <= 4; ++d)
            for (int shape = 0; shape < 2; ++shape) {
                std::vector<double> p(static_cast<std::size_t>(d));
                double tot = 0.0;
                for (int j = 0; j < d; ++j) tot += (p[static_cast<std::size_t>(j)] = shape ? j + 1.0 : 1.0);
                for (auto& x : p) x /= tot;
                for (double r : {0.5, 0.25}) {
                    double lhs = min_multinomial_exact(ell, d, p, 1.0 / r);
                    double rhs = std::pow(1.0 / r, static_cast<double>(ell)) * L_functional(ell, d, r, p).value;
                    mm = std::max(mm, std::abs(lhs - rhs));
                }
            }
    double fc = 0.0;
    for (double rho : {0.3, 0.5, 0.7, std::sqrt(0.5)})
        for (int k = 0; k <= 10; ++k) fc = std::max(fc, std::abs(kernel_fourier_coefficient(rho, k) - std::pow(rho, k)));
    bool ok = mb < 1e-10 && mm < 1e-8 && fc < 1e-10;
    return {ok, "max-binomial err " + num(mb) + " (<1e-10); min-multinomial err " + num(mm) +
                    " (<1e-8, form E[(1/r)^{sum min}] = (1/r)^l L_{l,d,r}); Fourier err " + num(fc) + " (<1e-10)"};
}

Outcome asymptotics() {
    double f1 = F_functional(4096, 0.25, 0.4), f2 = F_functional(8192, 0.25, 0.4);
    double rf = f2 / f1, tf = std::pow(2.0, -0.5);
    std::vector<double> p(3, 1.0 / 3.0);
    double l1 = L_functional(1024, 3, 0.5, p).value, l2 = L_functional(2048, 3, 0.5, p).value;
    double rl = l2 / l1;
    bool ok = std::abs(rf / tf - 1.0) < 0.05 && std::abs(rl / 0.5 - 1.0) < 0.10;
    return {ok, "F ratio " + num(rf) + " vs " + num(tf) + "; L ratio (d=3, r=1/2) " + num(rl) + " vs 0.5"};
}

Outcome one_step_identity() {
    const int configs[3][3] = {{6, 2, 4}, {10, 3, 5}, {12, 4, 6}};
    const std::vector<PolicySpec> policies{PolicySpec::greedy(), PolicySpec::exploratory(), PolicySpec::mix(0.5),
                                           PolicySpec::score_window(1.0)};
    std::size_t steps = 0, identity_fail = 0, jump_fail = 0, clock_fail = 0;
    for (int c = 0; c < 3; ++c) {
        auto model = ModelConfig::make(configs[c][0], configs[c][1], configs[c][2]);
        const int s = model.s;
        double a = std::sqrt(1.0 - 1.0 / s);
        for (int rep = 0; rep < 1000; ++rep) {
            Rng rng = make_rng(11, static_cast<std::uint64_t>(c * 1000 + rep));
            auto tr = run_branch(model, policies[static_cast<std::size_t>(rep) % policies.size()], 300, rng);
            try {
                tr.check_invariants();
            } catch (const std::logic_error&) {
                ++clock_fail;
            }
            auto prev = imbalance(tr.Z(0), 0, s);
            for (const auto& rec : tr.informative) {
                auto cur = imbalance(rec.Z, rec.n, s);
                std::int64_t d_j = prev.scaled_delta[static_cast<std::size_t>(rec.coordinate)];
                if (cur.scaled_V != prev.scaled_V + 2 * s * d_j + s * (s - 1)) ++identity_fail;
                if (std::abs(cur.W - prev.W) > a + 1e-12) ++jump_fail;
                prev = cur;
                ++steps;
            }
        }
    }
    bool ok = identity_fail == 0 && jump_fail == 0 && clock_fail == 0 && steps > 0;
    return {ok, std::to_string(steps) + " informative steps over 3000 trajectories; identity failures " +
                    std::to_string(identity_fail) + ", jump failures " + std::to_string(jump_fail) +
                    ", invariant failures " + std::to_string(clock_fail)};
}

Outcome drift_contraction() {
    auto model = ModelConfig::make(6, 2, 4);
    const std::int64_t horizon = 1000;
    const std::size_t reps = 100;  // 10^5 informative steps per policy
    std::ostringstream msg;

    auto ex = estimate_drift_and_kappa(model, PolicySpec::exploratory(), horizon, reps, 101);
    std::size_t used = 0, outside = 0;
    for (const auto& b : ex.buckets) {
        if (b.excluded || b.W <= 0.0) continue;
        ++used;
        if (std::abs(b.raw.mean) > 3.0 * b.raw.se) ++outside;
    }
    bool ex_ok = used > 0 && outside == 0;
    msg << "exploratory: " << outside << "/" << used << " buckets outside 3 SE";

    auto gr = estimate_drift_and_kappa(model, PolicySpec::greedy(), horizon, reps, 102);
    double cstar = 3.0 / 14.0;
    bool gr_ok = gr.kappa_hat >= cstar - 3.0 * gr.kappa_se;
    msg << "; greedy kappa " << num(gr.kappa_hat) << " (se " << num(gr.kappa_se) << ") vs 3/14";

    bool mix_ok = true;
    for (double alpha : {0.25, 0.5, 0.75}) {
        auto mx = estimate_drift_and_kappa(model, PolicySpec::mix(alpha), horizon, reps, 103);
        double se = std::sqrt(mx.kappa_se * mx.kappa_se + alpha * alpha * gr.kappa_se * gr.kappa_se);
        bool o = mx.kappa_hat >= alpha * gr.kappa_hat - 3.0 * se;
        mix_ok = mix_ok && o;
        msg << "; mix(" << alpha << ") kappa " << num(mx.kappa_hat) << " vs " << num(alpha * gr.kappa_hat)
            << (o ? "" : " FAIL");
    }
    return {ex_ok && gr_ok && mix_ok, msg.str()};
}

Outcome compression() {
    auto model = ModelConfig::make(10, 2, 8);
    auto g = exp_moment_diag(model, PolicySpec::greedy(), 0.5, {1000, 2000}, 10000, 7);
    auto e = exp_moment_diag(model, PolicySpec::exploratory(), 0.5, {500, 2000}, 10000, 7);
    double rg = g[1].value.mean / g[0].value.mean, re = e[1].value.mean / e[0].value.mean;
    bool ok = rg <= 1.1 && re >= 2.0;
    return {ok, "greedy ratio 2000/1000 = " + num(rg) + " (<= 1.1); exploratory ratio 2000/500 = " + num(re) +
                    " (>= 2)"};
}

Outcome first_order() {
    auto model = ModelConfig::make(10, 3, ModelConfig::m_from_gamma(10, 0.5));
    std::ostringstream msg;
    bool ok = true;
    std::uint64_t idx = 0;
    for (const auto& pol : {PolicySpec::greedy(), PolicySpec::exploratory(), PolicySpec::mix(0.5)}) {
        Rng rng = make_rng(5, idx++);
        auto sum = summarize_allocation({run_branch(model, pol, 100000, rng)});
        ok = ok && sum.max_abs_deviation < 0.01;
        msg << pol.name() << " max dev " << num(sum.max_abs_deviation) << "; ";
    }
    msg << "m = " << model.m;
    return {ok, msg.str()};
}

Outcome exact_law() {
    auto model = ModelConfig::make(6, 2, 4);
    auto exact = terminal_law_exact(model, PolicySpec::greedy(), 2);
    const std::size_t n = 1000000;
    auto emp = empirical_terminal_law(model, PolicySpec::greedy(), 2, n, 17, exact.space);
    std::map<State, double> freq;
    for (std::size_t i = 0; i < emp.support.size(); ++i) freq[emp.support[i]] = emp.mass[i];
    double worst = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < exact.support.size(); ++i) {
        double p = exact.mass[i].get_d();
        double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        double z = std::abs(freq[exact.support[i]] - p) / se;
        worst = std::max(worst, z);
        ok = ok && z <= 4.0;
    }
    for (const auto& [st, f] : freq) ok = ok && (exact.mass_of(st) > 0 || f == 0.0);
    return {ok, "max |z| = " + num(worst) + " over " + std::to_string(exact.support.size()) + " states, 10^6 branches"};
}

Outcome risk_consistency() {
    auto model = ModelConfig::make(8, 2, 4);
    const std::int64_t ell = 6;
    auto f = estimate_functionals(model, PolicySpec::exploratory(), ell, 100000, 23);
    double q = opportunity_rate(8, 2, 4).get_d();
    double ps = q / 2.0;
    double single = 2.0 * std::pow(1.0 - 0.75 * ps, static_cast<double>(ell));
    double cross = 2.0 * max_binomial_exact(ell, ps, 0.25).enumeration;
    std::vector<double> pi{ps, ps};
    for (int j = 0; j < 6; ++j) pi.push_back((1.0 - q) / 6.0);
    double overlap = min_multinomial_exact(ell, 8, pi, 2.0) / std::pow(2.0, static_cast<double>(ell));
    double literal = min_multinomial_exact(ell, 8, pi, std::sqrt(0.5)) / std::pow(std::sqrt(0.5), static_cast<double>(ell));
    double z1 = std::abs(f.single_tree_bias.mean - single) / f.single_tree_bias.se;
    double z2 = std::abs(f.cross_tree_bias.mean - cross) / f.cross_tree_bias.se;
    double z3 = std::abs(f.overlap.mean - overlap) / f.overlap.se;
    bool ok = z1 <= 4.0 && z2 <= 4.0 && z3 <= 4.0;
    return {ok, "single z " + num(z1) + ", cross z " + num(z2) + ", overlap z " + num(z3) +
                    " (overlap comparator E[2^{sum min}]/2^l = " + num(overlap) + "; estimate " + num(f.overlap.mean) +
                    "; base-2^{-1/2} form would give " + num(literal) + ")"};
}

Outcome schur() {
    Rng rng = make_rng(31, 0);
    std::size_t mismatches = 0;
    const int pairs = 10000;
    for (int it = 0; it < pairs; ++it) {
        int s = 2 + static_cast<int>(uniform_index(rng, 5));
        int d = s + static_cast<int>(uniform_index(rng, 4));
        int m = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(d)));
        auto model = ModelConfig::make(d, s, m);
        std::vector<std::int64_t> counts(static_cast<std::size_t>(d), 0);
        std::int64_t n = 0;
        for (int j = 0; j < s; ++j) n += (counts[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(uniform_index(rng, 8)));
        Mask mask = sample_mask(rng, d, m);
        std::vector<int> inf;
        for (int j : mask.members)
            if (j < s) inf.push_back(j);
        if (inf.empty()) {
            --it;
            continue;
        }
        auto greedy = greedy_set(model, counts, inf, 1e-12);
        // Psi evaluated at x = s(Delta + e_j) - 1, i.e. s times the centred post-split imbalance.
        auto minimisers = [&](int kind) {
            std::vector<long double> val;
            for (int j : inf) {
                long double acc = 0.0L;
                for (int k = 0; k < s; ++k) {
                    std::int64_t x = s * counts[static_cast<std::size_t>(k)] - n + (k == j ? s : 0) - 1;
                    long double xd = static_cast<long double>(x);
                    if (kind == 0) acc += xd * xd;
                    else if (kind == 1) acc += xd * xd * xd * xd;
                    else acc += std::exp(xd / s);
                }
                val.push_back(acc);
            }
            long double best = *std::min_element(val.begin(), val.end());
            std::vector<int> out;
            for (std::size_t i = 0; i < inf.size(); ++i)
                if (val[i] <= best + 1e-12L * std::abs(best)) out.push_back(inf[i]);
            return out;
        };
        for (int kind = 0; kind < 3; ++kind)
            if (minimisers(kind) != greedy) ++mismatches;
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches over " + std::to_string(pairs) +
                                 " (state, mask) pairs x 3 Schur-convex functions"};
}

Outcome forest() {
    ExperimentGrid grid;
    grid.snr = 2.0;
    grid.reps = 20;
    ForestParams fp;
    fp.n0 = 300;
    fp.ell = 5;
    fp.B = 100;
    auto rows = heatmap_experiment(grid, 40, 5, {}, fp, 2024, default_threads());
    auto cell = [&](double g, double w) {
        for (const auto& r : rows)
            if (std::abs(r.gamma - g) < 1e-12 && (r.w == w || (std::isinf(r.w) && std::isinf(w)))) return r;
        throw std::logic_error("missing grid cell");
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::ostringstream msg;
    bool windows = cell(0.6, 0.0).mean_mse < cell(0.6, inf).mean_mse;
    msg << "MSE(0.6,0) = " << num(cell(0.6, 0.0).mean_mse) << " vs MSE(0.6,inf) = " << num(cell(0.6, inf).mean_mse);
    bool tiny = true;
    for (double w : grid.w_grid) {
        bool o = cell(0.02, w).mean_mse > cell(0.6, w).mean_mse;
        tiny = tiny && o;
        msg << "; w=" << num(w) << ": " << num(cell(0.02, w).mean_mse) << " vs " << num(cell(0.6, w).mean_mse)
            << (o ? "" : " (not worse)");
    }
    return {windows && tiny, msg.str()};
}

}  // namespace

int main() {
    run("counterexample-exact", 1.0, counterexample);
    run("dp-vs-bruteforce", 10.0, dp_vs_bruteforce);
    run("poisson-identities", 30.0, poisson_identities);
    run("asymptotic-orders", 120.0, asymptotics);
    run("one-step-identity", 30.0, one_step_identity);
    run("drift-and-contraction", 120.0, drift_contraction);
    run("compression-contrast", 180.0, compression);
    run("first-order-limit", 30.0, first_order);
    run("exact-law-crosscheck", 120.0, exact_law);
    run("risk-consistency", 120.0, risk_consistency);
    run("schur-property", 10.0, schur);
    run("forest-qualitative", 600.0, forest);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}

#include "rfdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace rfdyn {

std::vector<std::int64_t> Trajectory::Z(std::int64_t n) const {
    if (n < 0 || n > static_cast<std::int64_t>(informative.size())) throw std::out_of_range("Trajectory::Z");
    if (n == 0) return std::vector<std::int64_t>(static_cast<std::size_t>(model.s), 0);
    return informative[static_cast<std::size_t>(n - 1)].Z;
}

void Trajectory::check_invariants() const {
    const auto ell = steps.size();
    if (counts.size() != ell + 1 || clock.size() != ell + 1) throw std::logic_error("trajectory: length mismatch");
    for (std::size_t t = 0; t <= ell; ++t) {
        if (t > 0 && clock[t] < clock[t - 1]) throw std::logic_error("trajectory: clock decreased");
        auto z = Z(clock[t]);
        std::int64_t total = 0;
        for (int j = 0; j < model.d; ++j) total += counts[t][static_cast<std::size_t>(j)];
        if (total != static_cast<std::int64_t>(t)) throw std::logic_error("trajectory: counts do not sum to depth");
        for (int j = 0; j < model.s; ++j)
            if (counts[t][static_cast<std::size_t>(j)] != z[static_cast<std::size_t>(j)])
                throw std::logic_error("trajectory: clock link N_t = Z_{M_t} violated");
    }
    for (std::size_t i = 0; i < informative.size(); ++i) {
        std::int64_t total = 0;
        for (auto v : informative[i].Z) total += v;
        if (total != informative[i].n) throw std::logic_error("trajectory: informative counts do not sum to n");
    }
}

Trajectory run_branch(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell, Rng& rng) {
    return run_branch(model, policy, ell, rng, rng);
}

Trajectory run_branch(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell, Rng& mask_rng,
                      Rng& choice_rng) {
    model.validate();
    policy.validate();
    if (ell < 0) throw std::invalid_argument("run_branch: negative length");
    Trajectory tr;
    tr.model = model;
    tr.steps.reserve(static_cast<std::size_t>(ell));
    tr.counts.reserve(static_cast<std::size_t>(ell + 1));
    tr.clock.reserve(static_cast<std::size_t>(ell + 1));
    CountState state = CountState::zero(model.d);
    std::int64_t clock = 0;
    tr.counts.push_back(state.counts);
    tr.clock.push_back(0);
    MaskSampler sampler(model.d, model.m);
    for (std::int64_t t = 1; t <= ell; ++t) {
        std::vector<int> mask = sampler.draw(mask_rng);
        std::sort(mask.begin(), mask.end());
        int j = select(policy, model, state.counts, mask, choice_rng);
        bool informative = mask.front() < model.s;
        state.increment(j);
        if (informative) {
            ++clock;
            std::vector<std::int64_t> z(state.counts.begin(), state.counts.begin() + model.s);
            tr.informative.push_back({clock, t, j, std::move(z)});
        }
        tr.steps.push_back({t, std::move(mask), j, informative});
        tr.counts.push_back(state.counts);
        tr.clock.push_back(clock);
    }
    return tr;
}

ImbalanceStats imbalance(std::span<const std::int64_t> Z, std::int64_t n, int s) {
    if (s < 1 || static_cast<int>(Z.size()) != s) throw std::invalid_argument("imbalance: Z must have s entries");
    std::int64_t total = 0;
    for (auto z : Z) total += z;
    if (total != n) throw std::invalid_argument("imbalance: sum of Z differs from n");
    ImbalanceStats st;
    st.scaled_delta.resize(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) {
        std::int64_t v = s * Z[static_cast<std::size_t>(j)] - n;
        st.scaled_delta[static_cast<std::size_t>(j)] = v;
        st.scaled_V += v * v;
    }
    st.W = std::sqrt(static_cast<double>(st.scaled_V)) / s;
    return st;
}

InformativeWalker::InformativeWalker(const ModelConfig& model, const PolicySpec& policy)
    : model_(model), policy_(policy), sampler_(model.d, model.m), counts_(static_cast<std::size_t>(model.d), 0) {
    model_.validate();
    policy_.validate();
}

int InformativeWalker::step(Rng& rng) {
    for (;;) {
        const auto& mask = sampler_.draw(rng);
        bool any = false;
        for (int j : mask)
            if (j < model_.s) { any = true; break; }
        if (!any) continue;
        int j = select(policy_, model_, counts_, mask, rng);
        ++counts_[static_cast<std::size_t>(j)];
        ++n_;
        return j;
    }
}

namespace {

void require_informative_possible(const ModelConfig& model) {
    if (opportunity_rate(model.d, model.s, model.m) == 0)
        throw std::invalid_argument("informative steps are impossible for this configuration");
}

struct DriftSample {
    std::vector<std::int64_t> key;
    double raw;
    double shifted;
};

}  // namespace

DriftReport estimate_drift_and_kappa(const ModelConfig& model, const PolicySpec& policy, std::int64_t horizon,
                                     std::size_t reps, std::uint64_t seed, unsigned threads, std::size_t min_count) {
    if (reps < 100) throw std::invalid_argument("estimate_drift_and_kappa: reps must be >= 100");
    if (horizon < 1) throw std::invalid_argument("estimate_drift_and_kappa: horizon must be >= 1");
    model.validate();
    require_informative_possible(model);
    const int s = model.s;
    const bool merge = model.equal_beta();
    std::vector<double> theta(static_cast<std::size_t>(s));
    double theta_bar = 0.0;
    for (int j = 0; j < s; ++j) {
        double b = model.beta[static_cast<std::size_t>(j)];
        theta[static_cast<std::size_t>(j)] = 0.5 * std::log2(b * b);
        theta_bar += theta[static_cast<std::size_t>(j)] / s;
    }

    std::vector<std::vector<DriftSample>> per_rep(reps);
    parallel_for(reps, threads, [&](std::size_t r) {
        Rng rng = make_rng(seed, r);
        InformativeWalker walker(model, policy);
        auto& out = per_rep[r];
        out.reserve(static_cast<std::size_t>(horizon));
        for (std::int64_t n = 0; n < horizon; ++n) {
            auto st = imbalance(walker.Z(), n, s);
            int j = walker.step(rng);
            double raw = static_cast<double>(st.scaled_delta[static_cast<std::size_t>(j)]) / s;
            double shifted = raw - (theta[static_cast<std::size_t>(j)] - theta_bar);
            auto key = std::move(st.scaled_delta);
            if (merge) std::sort(key.begin(), key.end());
            out.push_back({std::move(key), raw, shifted});
        }
    });

    std::map<std::vector<std::int64_t>, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& rep : per_rep)
        for (const auto& smp : rep) {
            auto& g = groups[smp.key];
            g.first.push_back(smp.raw);
            g.second.push_back(smp.shifted);
        }

    DriftReport report;
    report.merged_permutations = merge;
    report.min_count = min_count;
    report.steps = reps * static_cast<std::size_t>(horizon);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [key, vals] : groups) {
        DriftBucket b;
        b.key = key;
        std::int64_t sv = 0;
        for (auto v : key) sv += v * v;
        b.W = std::sqrt(static_cast<double>(sv)) / s;
        b.raw = estimate(vals.first);
        b.shifted = estimate(vals.second);
        b.excluded = vals.first.size() < min_count;
        if (!b.excluded && b.W > 0.0) {
            double k = (3.0 * b.raw.se - b.raw.mean) / b.W;
            if (k < best) {
                best = k;
                report.kappa_se = b.raw.se / b.W;
            }
        }
        report.buckets.push_back(std::move(b));
    }
    report.kappa_hat = std::isfinite(best) ? std::max(0.0, best) : 0.0;
    return report;
}

std::vector<MomentPoint> exp_moment_diag(const ModelConfig& model, const PolicySpec& policy, double eta,
                                         const std::vector<std::int64_t>& n_grid, std::size_t reps,
                                         std::uint64_t seed, unsigned threads) {
    if (!(eta >= 0.0)) throw std::invalid_argument("exp_moment_diag: eta must be >= 0");
    if (n_grid.empty() || !std::is_sorted(n_grid.begin(), n_grid.end()) || n_grid.front() < 0 ||
        std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end())
        throw std::invalid_argument("exp_moment_diag: n_grid must be strictly increasing and nonnegative");
    if (reps < 1) throw std::invalid_argument("exp_moment_diag: reps must be >= 1");
    model.validate();
    require_informative_possible(model);
    const std::size_t g = n_grid.size();
    std::vector<double> values(reps * g);
    parallel_for(reps, threads, [&](std::size_t r) {
        Rng rng = make_rng(seed, r);
        InformativeWalker walker(model, policy);
        for (std::size_t k = 0; k < g; ++k) {
            while (walker.n() < n_grid[k]) walker.step(rng);
            double W = imbalance(walker.Z(), walker.n(), model.s).W;
            values[k * reps + r] = eta == 0.0 ? 1.0 : std::exp(eta * W);
        }
    });
    std::vector<MomentPoint> out(g);
    for (std::size_t k = 0; k < g; ++k) {
        out[k].n = n_grid[k];
        out[k].value = estimate(std::span<const double>(values.data() + k * reps, reps));
    }
    return out;
}

AllocationSummary summarize_allocation(const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty()) throw std::invalid_argument("summarize_allocation: no trajectories");
    const auto& m0 = trajectories.front().model;
    const std::int64_t t = trajectories.front().length();
    if (t < 1) throw std::invalid_argument("summarize_allocation: trajectories must have positive length");
    AllocationSummary out;
    out.t = t;
    out.empirical.assign(static_cast<std::size_t>(m0.d), 0.0);
    for (const auto& tr : trajectories) {
        if (tr.model.d != m0.d || tr.model.s != m0.s || tr.model.m != m0.m || tr.length() != t)
            throw std::invalid_argument("summarize_allocation: trajectories must share configuration and length");
        const auto& last = tr.counts.back();
        for (int j = 0; j < m0.d; ++j)
            out.empirical[static_cast<std::size_t>(j)] += static_cast<double>(last[static_cast<std::size_t>(j)]) / t;
    }
    for (auto& e : out.empirical) e /= static_cast<double>(trajectories.size());
    out.target = allocation_target(m0.d, m0.s, m0.m);
    for (std::size_t j = 0; j < out.target.size(); ++j)
        out.max_abs_deviation = std::max(out.max_abs_deviation, std::abs(out.empirical[j] - out.target[j]));
    return out;
}

}  // namespace rfdyn

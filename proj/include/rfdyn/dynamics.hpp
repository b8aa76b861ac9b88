#pragma once

#include "rfdyn/environment.hpp"
#include "rfdyn/policies.hpp"
#include "rfdyn/stats.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rfdyn {

struct StepRecord {
    std::int64_t t = 0;
    std::vector<int> mask;  // sorted
    int chosen = -1;
    bool informative = false;
};

struct InformativeRecord {
    std::int64_t n = 0;     // informative step index, 1-based
    std::int64_t time = 0;  // raw time T_n of that step
    int coordinate = -1;    // J_n^inf
    std::vector<std::int64_t> Z;  // informative counts after the step, length s
};

struct Trajectory {
    ModelConfig model;
    std::vector<StepRecord> steps;                   // t = 1..l
    std::vector<std::vector<std::int64_t>> counts;   // N_0..N_l
    std::vector<std::int64_t> clock;                 // M_0..M_l
    std::vector<InformativeRecord> informative;      // n = 1..M_l

    std::int64_t length() const { return static_cast<std::int64_t>(steps.size()); }
    // Z_n for 0 <= n <= M_l.
    std::vector<std::int64_t> Z(std::int64_t n) const;
    // Throws std::logic_error if any structural invariant fails.
    void check_invariants() const;
};

Trajectory run_branch(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell, Rng& rng);
// Separate streams for masks and for the policy's own randomisation, so that different
// policies can be run on identical mask sequences.
Trajectory run_branch(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell, Rng& mask_rng,
                      Rng& choice_rng);

struct ImbalanceStats {
    std::vector<std::int64_t> scaled_delta;  // s Z_j - n
    std::int64_t scaled_V = 0;               // s^2 V_n
    double W = 0.0;
};

ImbalanceStats imbalance(std::span<const std::int64_t> Z, std::int64_t n, int s);

// Walks the informative-time process Z_n directly (masks without informative members are skipped).
class InformativeWalker {
public:
    InformativeWalker(const ModelConfig& model, const PolicySpec& policy);
    // Performs one informative step; returns the chosen coordinate.
    int step(Rng& rng);
    std::span<const std::int64_t> Z() const { return {counts_.data(), static_cast<std::size_t>(model_.s)}; }
    std::int64_t n() const { return n_; }

private:
    ModelConfig model_;
    PolicySpec policy_;
    MaskSampler sampler_;
    std::vector<std::int64_t> counts_;  // length d; noninformative entries stay 0
    std::int64_t n_ = 0;
};

struct DriftBucket {
    std::vector<std::int64_t> key;  // scaled imbalance (sorted when the bucket merges permutations)
    double W = 0.0;
    Estimate raw;       // increment Delta_{n, J_{n+1}}
    Estimate shifted;   // increment of the shifted-count imbalance
    bool excluded = false;  // fewer than min_count samples
};

struct DriftReport {
    std::vector<DriftBucket> buckets;
    bool merged_permutations = true;  // equal beta: buckets keyed by the multiset of scaled imbalances
    std::size_t min_count = 0;
    double kappa_hat = 0.0;
    double kappa_se = 0.0;  // SE / W of the binding bucket
    std::size_t steps = 0;
};

DriftReport estimate_drift_and_kappa(const ModelConfig& model, const PolicySpec& policy, std::int64_t horizon,
                                     std::size_t reps, std::uint64_t seed, unsigned threads = 1,
                                     std::size_t min_count = 100);

struct MomentPoint {
    std::int64_t n = 0;
    Estimate value;
};

std::vector<MomentPoint> exp_moment_diag(const ModelConfig& model, const PolicySpec& policy, double eta,
                                         const std::vector<std::int64_t>& n_grid, std::size_t reps,
                                         std::uint64_t seed, unsigned threads = 1);

struct AllocationSummary {
    std::int64_t t = 0;
    std::vector<double> empirical;  // average of N_t / t over trajectories
    std::vector<double> target;
    double max_abs_deviation = 0.0;
};

AllocationSummary summarize_allocation(const std::vector<Trajectory>& trajectories);

}  // namespace rfdyn

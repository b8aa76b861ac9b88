#pragma once

#include "rfdyn/environment.hpp"
#include "rfdyn/poisson.hpp"
#include "rfdyn/policies.hpp"
#include "rfdyn/stats.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rfdyn {

struct RiskFunctionals {
    Estimate single_tree_bias;  // sum_j beta_j^2 E[2^{-2 N_j}]
    Estimate cross_tree_bias;   // sum_j beta_j^2 E[2^{-2 max(N_j, N'_j)}]
    Estimate overlap;           // E[2^{-||N - N'||_1 / 2}]
    std::size_t pairs = 0;
};

// Independent pairs of depth-l branches. Pair i draws masks from stream (seed, 2i) and
// (seed, 2i+1) and policy randomness from separate streams, so policies can be compared
// on identical mask sequences.
RiskFunctionals estimate_functionals(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell,
                                     std::size_t reps, std::uint64_t seed, unsigned threads = 1);

struct BoundTerms {
    std::string kind;  // "cart" or "benchmark"
    double q = 0.0;
    std::int64_t ell = 0;
    long B = 1;
    long n0 = 1;
    double bias1 = 0.0;
    double bias2_prefactor = 0.0;  // base^{2l}
    double F_r = 0.0;
    double F_alpha = 0.0;
    double F_value = 0.0;
    double bias2 = 0.0;
    double L_r = 0.5;
    std::vector<double> pi;  // cart: (q, (1-q)/(d-s), ...) of length d-s+1; benchmark: length d
    LValue L;
    double varterm = 0.0;    // 2^l / n0 * L
    double remainder = 0.0;  // (1 - 2^{-l})^{n0}
    bool etareq_applicable = false;
    bool etareq_passes = true;
};

BoundTerms cart_bound_terms(const ModelConfig& model, std::int64_t ell, long B, long n0, const LOptions& opts = {});
BoundTerms benchmark_bound_terms(const ModelConfig& model, std::int64_t ell, long B, long n0,
                                 const LOptions& opts = {});

struct ReplacementRow {
    std::int64_t ell = 0;
    Estimate moment;  // average over informative j of E[2^{-2 N_{l,j}}]
    double reference = 0.0;
    double ratio = 0.0;
    double ratio_se = 0.0;
};

struct ReplacementReport {
    std::vector<ReplacementRow> rows;
    bool benchmark_reference = false;  // exploratory policy uses (1 - 3q/(4s))^l
    bool etareq_applicable = false;
    bool etareq_passes = true;
};

ReplacementReport equilibrium_replacement_ratio(const ModelConfig& model, const PolicySpec& policy,
                                                const std::vector<std::int64_t>& ell_grid, std::size_t reps,
                                                std::uint64_t seed, unsigned threads = 1);

}  // namespace rfdyn

#pragma once

#include "rfdyn/random.hpp"
#include "rfdyn/rational.hpp"

#include <vector>

namespace rfdyn {

// Coordinates are 0-based internally; the informative set is {0, ..., s-1}.
struct ModelConfig {
    int d = 1;
    int s = 1;
    int m = 1;
    std::vector<double> beta;  // length s, nonzero
    double sigma0_sq = 0.0;

    void validate() const;
    bool equal_beta() const;

    // beta defaults to all ones when empty.
    static ModelConfig make(int d, int s, int m, std::vector<double> beta = {}, double sigma0_sq = 0.0);
    // m = ceil(gamma * d), guarded against rounding just above an integer.
    static int m_from_gamma(int d, double gamma);
};

struct Mask {
    std::vector<int> members;  // sorted, distinct
};

// Uniform m-subset of {0, ..., d-1}.
Mask sample_mask(Rng& rng, int d, int m);

// Reusable sampler: partial Fisher-Yates on a persistent permutation.
class MaskSampler {
public:
    MaskSampler(int d, int m);
    // Members in random order (not sorted); valid until the next call.
    const std::vector<int>& draw(Rng& rng);

private:
    int m_;
    std::vector<int> perm_;
    std::vector<int> out_;
};

Rational opportunity_rate(int d, int s, int m);
// Zero for k outside [0, min(s, m)].
Rational hypergeom_pmf(int d, int s, int m, int k);

struct DriftConstant {
    Rational kernel;  // sum_{k>=2} (k-1) P(K=k | K>=1)
    long double value = 0.0L;
    bool nondegenerate = false;  // P(K>=2 | K>=1) > 0
};
DriftConstant drift_constant_cstar(int d, int s, int m);

struct EtaReqReport {
    double eta_req = 0.0;
    double threshold = 0.0;
    double cstar = 0.0;
    bool passes = false;
};
EtaReqReport check_etareq(int d, int s, int m);

// Limit allocation vector (q/s, ..., (1-q)/(d-s), ...) of length d.
std::vector<double> allocation_target(int d, int s, int m);

}  // namespace rfdyn

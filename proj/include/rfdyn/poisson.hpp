#pragma once

#include "rfdyn/quadrature.hpp"
#include "rfdyn/random.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace rfdyn {

// P_rho(theta) / (2 pi).
double kernel_density(double rho, double theta);

// Wrapped-Cauchy draw in [-pi, pi] by the inverse CDF.
double sample_kernel(double rho, Rng& rng);

// Integral of cos(k theta) against the kernel density, by quadrature.
double kernel_fourier_coefficient(double rho, int k, double tol = 1e-13);

// E |(1-a) + a e^{i Xi}|^{2l}, Xi ~ kernel with parameter sqrt(r).
double F_functional(long ell, double r, double alpha, double tol = 1e-12);

struct LOptions {
    double tol = 0.0;                 // 0: 1e-12 for d <= 3, 1e-10 for d = 4
    int max_quadrature_dim = 4;       // largest d handled by deterministic quadrature
    std::size_t mc_samples = 100000;  // Monte Carlo draws for larger d
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct LValue {
    double value = 0.0;
    double se = 0.0;  // 0 for quadrature
    bool monte_carlo = false;
};

// E |sum_j p_j e^{i Theta_j}|^{2l}, Theta_j iid kernel with parameter sqrt(r).
LValue L_functional(long ell, int d, double r, const std::vector<double>& p, const LOptions& opts = {});

std::complex<double> binom_pgf(long ell, double p, std::complex<double> z);

struct MaxBinomial {
    double enumeration = 0.0;  // sum_{i,j} pmf(i) pmf(j) r^{max(i,j)}
    double closed_form = 0.0;  // (1-p+p sqrt r)^{2l} F_{l,r}(p sqrt r / (1-p+p sqrt r))
};
MaxBinomial max_binomial_exact(long ell, double p, double r);

// E[base^{sum_j min(N_j, N'_j)}] for independent Multinomial(l, p) vectors, by enumeration.
double min_multinomial_exact(long ell, int d, const std::vector<double>& p, double base);

// E[rho^{||N - N'||_1}] for independent Multinomial(l, p) vectors, by enumeration.
double l1_damping_exact(long ell, int d, const std::vector<double>& p, double rho);

// Compositions of l into d parts with their multinomial probabilities.
struct MultinomialTable {
    std::vector<std::vector<int>> outcomes;
    std::vector<double> pmf;
};
MultinomialTable multinomial_table(long ell, int d, const std::vector<double>& p, std::size_t max_outcomes = 100000);

void validate_simplex(const std::vector<double>& p);

}  // namespace rfdyn

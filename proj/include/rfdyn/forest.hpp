#pragma once

#include "rfdyn/environment.hpp"
#include "rfdyn/random.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace rfdyn {

// Column-major design matrix: X[j * n + i].
struct Dataset {
    std::size_t n = 0;
    int d = 0;
    std::vector<double> X;
    std::vector<double> y;

    double x(std::size_t i, int j) const { return X[static_cast<std::size_t>(j) * n + i]; }
    std::vector<double> row(std::size_t i) const;
    void validate() const;
};

// X uniform on [0,1]^d, y = sum_{j<s} beta_j x_j + N(0, sigma0^2).
Dataset generate_data(const ModelConfig& model, std::size_t n, Rng& rng);

// Regression function sum_{j<s} beta_j x_j.
double signal(const ModelConfig& model, const std::vector<double>& x);

// Product of dyadic intervals [lo_j, hi_j).
struct Cell {
    std::vector<double> lo, hi;
    static Cell unit(int d);
    bool contains(const std::vector<double>& x) const;
    double midpoint(int j) const { return 0.5 * (lo[static_cast<std::size_t>(j)] + hi[static_cast<std::size_t>(j)]); }
};

inline constexpr double kNoSplit = -std::numeric_limits<double>::infinity();

// Midpoint impurity decrease Var - pL VarL - pR VarR (biased variances) on the points in
// `idx`, evaluated in the equivalent form pL pR (mean_L - mean_R)^2. kNoSplit when either
// child has fewer than min_leaf points.
double empirical_gain(const Dataset& data, const std::vector<std::size_t>& idx, const Cell& cell, int j,
                      std::size_t min_leaf);
double empirical_gain(const Dataset& data, const Cell& cell, int j, std::size_t min_leaf);

struct TreeNode {
    Cell cell;
    int depth = 0;
    int split = -1;  // -1 for a leaf
    int left = -1, right = -1;
    double value = 0.0;  // honest leaf mean
    std::size_t est_count = 0;

    bool is_leaf() const { return split < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // root at index 0

    std::size_t leaf_of(const std::vector<double>& x) const;
    std::size_t leaf_of(const Dataset& data, std::size_t i) const;
    std::size_t leaf_count() const;
    int max_depth() const;
};

// Empirical score-window tree: at each node a mask of ceil(gamma d) coordinates, window set
// {j : G_j >= 2^{-2w} G_max} (w = inf: all positive-gain members; G_max <= 0: all admissible
// members), uniform choice, midpoint split.
Tree grow_tree(const Dataset& split_data, int d, double w, double gamma, int ell, std::size_t min_leaf, Rng& rng);

// Honest leaf means from est_data; empty leaves predict 0.
void fit_leaves(Tree& tree, const Dataset& est_data);

double predict(const Tree& tree, const std::vector<double>& x);

// Fits every tree on est_data and returns the forest average at each test row.
std::vector<double> fit_and_predict(std::vector<Tree>& trees, const Dataset& est_data,
                                    const std::vector<std::vector<double>>& test_X);

struct ForestParams {
    std::size_t n0 = 500;  // size of each of the split and estimation samples
    int ell = 5;
    std::size_t min_leaf = 5;
    int B = 200;
    std::size_t n_test = 100;
};

struct ExperimentGrid {
    std::vector<double> gamma_grid{0.02, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<double> w_grid{0.0, 0.5, 1.0, 2.0, 4.0, 8.0, std::numeric_limits<double>::infinity()};
    double snr = 2.0;  // ||beta||_2 / sigma0; inf means noiseless
    std::size_t reps = 20;

    void validate() const;
};

struct HeatmapRow {
    double gamma = 0.0;
    double w = 0.0;
    double snr = 0.0;
    std::size_t rep_count = 0;
    double mean_mse = 0.0;
    double se = 0.0;
};

// Test MSE against the regression function, averaged over replications. Replication r uses
// the same data and the same tree seeds in every grid cell.
std::vector<HeatmapRow> heatmap_experiment(const ExperimentGrid& grid, int d, int s, const std::vector<double>& beta,
                                           const ForestParams& params, std::uint64_t seed, unsigned threads = 1);

std::string heatmap_csv(const std::vector<HeatmapRow>& rows);

}  // namespace rfdyn

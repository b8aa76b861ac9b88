#include "rfdyn/forest.hpp"
#include "rfdyn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace rfdyn {

std::vector<double> Dataset::row(std::size_t i) const {
    std::vector<double> r(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) r[static_cast<std::size_t>(j)] = x(i, j);
    return r;
}

void Dataset::validate() const {
    if (X.size() != n * static_cast<std::size_t>(d) || y.size() != n)
        throw std::invalid_argument("Dataset: inconsistent dimensions");
    for (double v : X)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("Dataset: X entries must lie in [0, 1]");
}

Dataset generate_data(const ModelConfig& model, std::size_t n, Rng& rng) {
    model.validate();
    if (n < 1) throw std::invalid_argument("generate_data: n must be >= 1");
    Dataset data;
    data.n = n;
    data.d = model.d;
    data.X.resize(n * static_cast<std::size_t>(model.d));
    data.y.assign(n, 0.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < model.d; ++j) data.X[static_cast<std::size_t>(j) * n + i] = unif(rng);
    const double sigma = std::sqrt(model.sigma0_sq);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (int j = 0; j < model.s; ++j) v += model.beta[static_cast<std::size_t>(j)] * data.x(i, j);
        if (sigma > 0.0) v += sigma * noise(rng);
        data.y[i] = v;
    }
    return data;
}

double signal(const ModelConfig& model, const std::vector<double>& x) {
    double v = 0.0;
    for (int j = 0; j < model.s; ++j) v += model.beta[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    return v;
}

Cell Cell::unit(int d) {
    Cell c;
    c.lo.assign(static_cast<std::size_t>(d), 0.0);
    c.hi.assign(static_cast<std::size_t>(d), 1.0);
    return c;
}

bool Cell::contains(const std::vector<double>& x) const {
    for (std::size_t j = 0; j < lo.size(); ++j) {
        // The upper face of the unit cube belongs to the cell touching it.
        bool upper_ok = x[j] < hi[j] || (hi[j] == 1.0 && x[j] == 1.0);
        if (x[j] < lo[j] || !upper_ok) return false;
    }
    return true;
}

double empirical_gain(const Dataset& data, const std::vector<std::size_t>& idx, const Cell& cell, int j,
                      std::size_t min_leaf) {
    if (j < 0 || j >= data.d) throw std::invalid_argument("empirical_gain: coordinate out of range");
    if (idx.empty()) return kNoSplit;
    const double mid = cell.midpoint(j);
    const double* col = data.X.data() + static_cast<std::size_t>(j) * data.n;
    std::size_t nl = 0;
    double sl = 0.0, sr = 0.0;
    for (std::size_t i : idx) {
        if (col[i] < mid) {
            ++nl;
            sl += data.y[i];
        } else {
            sr += data.y[i];
        }
    }
    const std::size_t nr = idx.size() - nl;
    if (nl < min_leaf || nr < min_leaf || nl == 0 || nr == 0) return kNoSplit;
    const double n = static_cast<double>(idx.size());
    const double diff = sl / static_cast<double>(nl) - sr / static_cast<double>(nr);
    return (static_cast<double>(nl) / n) * (static_cast<double>(nr) / n) * diff * diff;
}

double empirical_gain(const Dataset& data, const Cell& cell, int j, std::size_t min_leaf) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.n; ++i) {
        bool in = true;
        for (int k = 0; k < data.d && in; ++k) {
            double v = data.x(i, k);
            in = v >= cell.lo[static_cast<std::size_t>(k)] &&
                 (v < cell.hi[static_cast<std::size_t>(k)] || (cell.hi[static_cast<std::size_t>(k)] == 1.0 && v == 1.0));
        }
        if (in) idx.push_back(i);
    }
    return empirical_gain(data, idx, cell, j, min_leaf);
}

std::size_t Tree::leaf_of(const std::vector<double>& x) const {
    std::size_t k = 0;
    while (!nodes[k].is_leaf()) {
        const auto& nd = nodes[k];
        k = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.split)] < nd.cell.midpoint(nd.split) ? nd.left : nd.right);
    }
    return k;
}

std::size_t Tree::leaf_of(const Dataset& data, std::size_t i) const {
    std::size_t k = 0;
    while (!nodes[k].is_leaf()) {
        const auto& nd = nodes[k];
        k = static_cast<std::size_t>(data.x(i, nd.split) < nd.cell.midpoint(nd.split) ? nd.left : nd.right);
    }
    return k;
}

std::size_t Tree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::max_depth() const {
    int m = 0;
    for (const auto& n : nodes) m = std::max(m, n.depth);
    return m;
}

Tree grow_tree(const Dataset& split_data, int d, double w, double gamma, int ell, std::size_t min_leaf, Rng& rng) {
    if (split_data.d != d) throw std::invalid_argument("grow_tree: dimension mismatch");
    if (!(w >= 0.0)) throw std::invalid_argument("grow_tree: w must be >= 0");
    if (ell < 0) throw std::invalid_argument("grow_tree: l must be >= 0");
    const int m = ModelConfig::m_from_gamma(d, gamma);
    const double factor = std::isinf(w) ? 0.0 : std::exp2(-2.0 * w);
    MaskSampler sampler(d, m);
    Tree tree;
    tree.nodes.push_back({Cell::unit(d), 0, -1, -1, -1, 0.0, 0});
    std::vector<std::vector<std::size_t>> members(1);
    members[0].resize(split_data.n);
    std::iota(members[0].begin(), members[0].end(), 0);
    std::vector<int> window;
    std::vector<double> gains;
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        if (tree.nodes[k].depth >= ell) continue;
        const auto& mask = sampler.draw(rng);
        gains.assign(mask.size(), kNoSplit);
        double gmax = kNoSplit;
        for (std::size_t a = 0; a < mask.size(); ++a) {
            gains[a] = empirical_gain(split_data, members[k], tree.nodes[k].cell, mask[a], min_leaf);
            gmax = std::max(gmax, gains[a]);
        }
        if (gmax == kNoSplit) continue;
        window.clear();
        for (std::size_t a = 0; a < mask.size(); ++a) {
            double g = gains[a];
            if (g == kNoSplit) continue;
            bool keep;
            if (gmax <= 0.0) keep = true;
            else if (std::isinf(w)) keep = g > 0.0;
            else keep = g >= factor * gmax;
            if (keep) window.push_back(mask[a]);
        }
        std::sort(window.begin(), window.end());
        const int j = window.size() == 1 ? window[0] : window[uniform_index(rng, window.size())];

        TreeNode left{tree.nodes[k].cell, tree.nodes[k].depth + 1, -1, -1, -1, 0.0, 0};
        TreeNode right = left;
        const double mid = tree.nodes[k].cell.midpoint(j);
        left.cell.hi[static_cast<std::size_t>(j)] = mid;
        right.cell.lo[static_cast<std::size_t>(j)] = mid;
        std::vector<std::size_t> li, ri;
        for (std::size_t i : members[k]) (split_data.x(i, j) < mid ? li : ri).push_back(i);
        members[k].clear();
        members[k].shrink_to_fit();
        tree.nodes[k].split = j;
        tree.nodes[k].left = static_cast<int>(tree.nodes.size());
        tree.nodes[k].right = static_cast<int>(tree.nodes.size() + 1);
        tree.nodes.push_back(std::move(left));
        tree.nodes.push_back(std::move(right));
        members.push_back(std::move(li));
        members.push_back(std::move(ri));
    }
    return tree;
}

void fit_leaves(Tree& tree, const Dataset& est_data) {
    std::vector<double> sum(tree.nodes.size(), 0.0);
    for (auto& n : tree.nodes) n.est_count = 0;
    for (std::size_t i = 0; i < est_data.n; ++i) {
        std::size_t k = tree.leaf_of(est_data, i);
        sum[k] += est_data.y[i];
        ++tree.nodes[k].est_count;
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        auto& n = tree.nodes[k];
        n.value = n.is_leaf() && n.est_count > 0 ? sum[k] / static_cast<double>(n.est_count) : 0.0;
    }
}

double predict(const Tree& tree, const std::vector<double>& x) { return tree.nodes[tree.leaf_of(x)].value; }

std::vector<double> fit_and_predict(std::vector<Tree>& trees, const Dataset& est_data,
                                    const std::vector<std::vector<double>>& test_X) {
    if (trees.empty()) throw std::invalid_argument("fit_and_predict: no trees");
    std::vector<double> out(test_X.size(), 0.0);
    for (auto& t : trees) {
        fit_leaves(t, est_data);
        for (std::size_t i = 0; i < test_X.size(); ++i) out[i] += predict(t, test_X[i]);
    }
    for (auto& v : out) v /= static_cast<double>(trees.size());
    return out;
}

void ExperimentGrid::validate() const {
    if (gamma_grid.empty() || w_grid.empty()) throw std::invalid_argument("grids must be nonempty");
    for (double g : gamma_grid)
        if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("gamma values must lie in (0, 1]");
    for (double w : w_grid)
        if (!(w >= 0.0)) throw std::invalid_argument("w values must be >= 0");
    if (!(snr > 0.0)) throw std::invalid_argument("snr must be positive");
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
}

std::vector<HeatmapRow> heatmap_experiment(const ExperimentGrid& grid, int d, int s, const std::vector<double>& beta,
                                           const ForestParams& params, std::uint64_t seed, unsigned threads) {
    grid.validate();
    if (params.n0 < 1 || params.B < 1 || params.n_test < 1 || params.ell < 0)
        throw std::invalid_argument("forest parameters must be positive");
    double norm = 0.0;
    std::vector<double> b = beta.empty() ? std::vector<double>(static_cast<std::size_t>(std::max(s, 0)), 1.0) : beta;
    for (double v : b) norm += v * v;
    norm = std::sqrt(norm);
    const double sigma0 = std::isinf(grid.snr) ? 0.0 : norm / grid.snr;
    const ModelConfig model = ModelConfig::make(d, s, 1, b, sigma0 * sigma0);

    const std::size_t cells = grid.gamma_grid.size() * grid.w_grid.size();
    std::vector<double> mse(cells * grid.reps);
    parallel_for(grid.reps, threads, [&](std::size_t r) {
        Rng data_rng = make_rng(seed, r);
        Dataset split = generate_data(model, params.n0, data_rng);
        Dataset est = generate_data(model, params.n0, data_rng);
        Dataset test = generate_data(model, params.n_test, data_rng);
        std::vector<std::vector<double>> test_X(params.n_test);
        std::vector<double> truth(params.n_test);
        for (std::size_t i = 0; i < params.n_test; ++i) {
            test_X[i] = test.row(i);
            truth[i] = signal(model, test_X[i]);
        }
        const std::uint64_t tree_master = derive_seed(seed ^ 0x5eedf0e57ULL, r);
        std::size_t c = 0;
        for (double gamma : grid.gamma_grid)
            for (double w : grid.w_grid) {
                std::vector<Tree> trees;
                trees.reserve(static_cast<std::size_t>(params.B));
                for (int t = 0; t < params.B; ++t) {
                    Rng rng = make_rng(tree_master, static_cast<std::uint64_t>(t));
                    trees.push_back(grow_tree(split, d, w, gamma, params.ell, params.min_leaf, rng));
                }
                auto pred = fit_and_predict(trees, est, test_X);
                double acc = 0.0;
                for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - truth[i]) * (pred[i] - truth[i]);
                mse[c * grid.reps + r] = acc / static_cast<double>(pred.size());
                ++c;
            }
    });
    std::vector<HeatmapRow> rows;
    std::size_t c = 0;
    for (double gamma : grid.gamma_grid)
        for (double w : grid.w_grid) {
            Estimate e = estimate(std::span<const double>(mse.data() + c * grid.reps, grid.reps));
            rows.push_back({gamma, w, grid.snr, grid.reps, e.mean, e.se});
            ++c;
        }
    return rows;
}

namespace {

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::string heatmap_csv(const std::vector<HeatmapRow>& rows) {
    std::string out = "gamma,w,snr,rep_count,mean_mse,se\n";
    for (const auto& r : rows)
        out += num(r.gamma) + "," + num(r.w) + "," + num(r.snr) + "," + std::to_string(r.rep_count) + "," +
               num(r.mean_mse) + "," + num(r.se) + "\n";
    return out;
}

}  // namespace rfdyn

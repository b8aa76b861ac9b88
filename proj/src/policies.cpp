#include "rfdyn/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfdyn {

namespace {

// beta^2 2^{-2N} as mant * 2^exp with mant in [0.5, 1); never underflows.
struct ScaledGain {
    double mant;
    std::int64_t exp;
};

ScaledGain scaled_gain(const ModelConfig& model, std::span<const std::int64_t> counts, int j) {
    double b = model.beta[static_cast<std::size_t>(j)];
    int e = 0;
    double mant = std::frexp(b * b, &e);
    return {mant, static_cast<std::int64_t>(e) - 2 * counts[static_cast<std::size_t>(j)]};
}

bool less(const ScaledGain& a, const ScaledGain& b) {
    return a.exp != b.exp ? a.exp < b.exp : a.mant < b.mant;
}

// a / b as a double, flushed to 0 or inf when far out of range.
double ratio(const ScaledGain& a, const ScaledGain& b) {
    std::int64_t de = a.exp - b.exp;
    if (de < -2000) return 0.0;
    if (de > 2000) return std::numeric_limits<double>::infinity();
    return std::ldexp(a.mant / b.mant, static_cast<int>(de));
}

ScaledGain max_gain(const ModelConfig& model, std::span<const std::int64_t> counts, std::span<const int> informative) {
    ScaledGain best = scaled_gain(model, counts, informative[0]);
    for (std::size_t i = 1; i < informative.size(); ++i) {
        ScaledGain g = scaled_gain(model, counts, informative[i]);
        if (less(best, g)) best = g;
    }
    return best;
}

void threshold_set(const ModelConfig& model, std::span<const std::int64_t> counts, std::span<const int> informative,
                   double threshold, std::vector<int>& out) {
    out.clear();
    ScaledGain best = max_gain(model, counts, informative);
    for (int j : informative)
        if (ratio(scaled_gain(model, counts, j), best) >= threshold) out.push_back(j);
}

double window_threshold(double w, double tol) {
    if (std::isinf(w)) return 0.0;
    return std::exp2(-2.0 * w) * (1.0 - tol);
}

void informative_members(const ModelConfig& model, std::span<const int> mask, std::vector<int>& out) {
    out.clear();
    for (int j : mask)
        if (j < model.s) out.push_back(j);
}

}  // namespace

CountState CountState::zero(int d) {
    CountState c;
    c.counts.assign(static_cast<std::size_t>(d), 0);
    return c;
}

void CountState::increment(int j) {
    ++counts.at(static_cast<std::size_t>(j));
    ++depth;
}

void CountState::validate() const {
    std::int64_t total = 0;
    for (auto c : counts) {
        if (c < 0) throw std::invalid_argument("CountState: negative count");
        total += c;
    }
    if (total != depth) throw std::invalid_argument("CountState: depth differs from the sum of counts");
}

PolicySpec PolicySpec::greedy() { return {}; }

PolicySpec PolicySpec::exploratory() {
    PolicySpec p;
    p.kind = PolicyKind::Exploratory;
    p.alpha = 0.0;
    return p;
}

PolicySpec PolicySpec::mix(double alpha) {
    PolicySpec p;
    p.kind = PolicyKind::AlphaMix;
    p.alpha = alpha;
    p.validate();
    return p;
}

PolicySpec PolicySpec::score_window(double w) {
    PolicySpec p;
    p.kind = PolicyKind::ScoreWindow;
    p.window = w;
    p.validate();
    return p;
}

PolicySpec PolicySpec::parse(const std::string& text) {
    if (text == "greedy") return greedy();
    if (text == "exploratory") return exploratory();
    auto value = [&](std::size_t prefix) {
        std::string v = text.substr(prefix);
        if (v == "inf") return std::numeric_limits<double>::infinity();
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("bad policy parameter: " + text);
        return x;
    };
    try {
        if (text.rfind("mix:", 0) == 0) return mix(value(4));
        if (text.rfind("window:", 0) == 0) return score_window(value(7));
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad policy parameter: " + text);
    }
    throw std::invalid_argument("unknown policy: " + text);
}

std::string PolicySpec::name() const {
    switch (kind) {
        case PolicyKind::Greedy: return "greedy";
        case PolicyKind::Exploratory: return "exploratory";
        case PolicyKind::AlphaMix: {
            std::string s = std::to_string(alpha);
            s.erase(s.find_last_not_of('0') + 1);
            if (s.back() == '.') s.pop_back();
            return "mix:" + s;
        }
        case PolicyKind::ScoreWindow: {
            if (std::isinf(window)) return "window:inf";
            std::string s = std::to_string(window);
            s.erase(s.find_last_not_of('0') + 1);
            if (s.back() == '.') s.pop_back();
            return "window:" + s;
        }
    }
    return "?";
}

void PolicySpec::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    if (!(window >= 0.0)) throw std::invalid_argument("window must be >= 0");
    if (!(tie_tolerance >= 0.0)) throw std::invalid_argument("tie_tolerance must be >= 0");
}

double gain(const ModelConfig& model, const CountState& state, int j) {
    if (j < 0 || j >= model.d) throw std::invalid_argument("gain: coordinate out of range");
    if (j >= model.s) return 0.0;
    double b = model.beta[static_cast<std::size_t>(j)];
    auto n = state.counts.at(static_cast<std::size_t>(j));
    if (n > 600) return 0.0;
    return b * b * std::ldexp(1.0, static_cast<int>(-2 * n)) / 12.0;
}

std::vector<int> greedy_set(const ModelConfig& model, std::span<const std::int64_t> counts,
                            std::span<const int> informative, double tie_tolerance) {
    std::vector<int> out;
    if (!informative.empty()) threshold_set(model, counts, informative, 1.0 - tie_tolerance, out);
    return out;
}

std::vector<int> window_set(const ModelConfig& model, std::span<const std::int64_t> counts,
                            std::span<const int> informative, double w, double tie_tolerance) {
    std::vector<int> out;
    if (!informative.empty()) threshold_set(model, counts, informative, window_threshold(w, tie_tolerance), out);
    return out;
}

bool window_threshold_dyadic(double w) {
    return std::isinf(w) || std::floor(2.0 * w) == 2.0 * w;
}

ActionMixture action_mixture(const PolicySpec& policy, const ModelConfig& model, std::span<const std::int64_t> counts,
                             std::span<const int> mask) {
    if (mask.empty()) throw std::invalid_argument("action_mixture: empty mask");
    std::vector<int> inf;
    informative_members(model, mask, inf);
    if (inf.empty()) return {{1.0, std::vector<int>(mask.begin(), mask.end())}};
    switch (policy.kind) {
        case PolicyKind::Greedy: return {{1.0, greedy_set(model, counts, inf, policy.tie_tolerance)}};
        case PolicyKind::Exploratory: return {{1.0, inf}};
        case PolicyKind::ScoreWindow:
            return {{1.0, window_set(model, counts, inf, policy.window, policy.tie_tolerance)}};
        case PolicyKind::AlphaMix: {
            ActionMixture mix;
            if (policy.alpha > 0.0) mix.push_back({policy.alpha, greedy_set(model, counts, inf, policy.tie_tolerance)});
            if (policy.alpha < 1.0) mix.push_back({1.0 - policy.alpha, inf});
            return mix;
        }
    }
    return {};
}

std::vector<double> action_distribution(const PolicySpec& policy, const ModelConfig& model, const CountState& state,
                                        const Mask& mask) {
    std::vector<double> p(mask.members.size(), 0.0);
    for (const auto& comp : action_mixture(policy, model, state.counts, mask.members)) {
        double each = comp.weight / static_cast<double>(comp.support.size());
        for (int j : comp.support) {
            auto it = std::find(mask.members.begin(), mask.members.end(), j);
            p[static_cast<std::size_t>(it - mask.members.begin())] += each;
        }
    }
    return p;
}

int select(const PolicySpec& policy, const ModelConfig& model, std::span<const std::int64_t> counts,
           std::span<const int> mask, Rng& rng) {
    if (mask.empty()) throw std::invalid_argument("select: empty mask");
    thread_local std::vector<int> inf, set;
    informative_members(model, mask, inf);
    if (inf.empty()) return mask[uniform_index(rng, mask.size())];
    bool use_greedy = false;
    switch (policy.kind) {
        case PolicyKind::Exploratory: break;
        case PolicyKind::Greedy: use_greedy = true; break;
        case PolicyKind::AlphaMix: use_greedy = policy.alpha >= 1.0 || (policy.alpha > 0.0 && uniform01(rng) < policy.alpha); break;
        case PolicyKind::ScoreWindow:
            threshold_set(model, counts, inf, window_threshold(policy.window, policy.tie_tolerance), set);
            return set.size() == 1 ? set[0] : set[uniform_index(rng, set.size())];
    }
    if (!use_greedy) return inf.size() == 1 ? inf[0] : inf[uniform_index(rng, inf.size())];
    threshold_set(model, counts, inf, 1.0 - policy.tie_tolerance, set);
    return set.size() == 1 ? set[0] : set[uniform_index(rng, set.size())];
}

}  // namespace rfdyn

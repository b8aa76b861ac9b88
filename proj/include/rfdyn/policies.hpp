#pragma once

#include "rfdyn/environment.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rfdyn {

struct CountState {
    std::vector<std::int64_t> counts;
    std::int64_t depth = 0;

    static CountState zero(int d);
    void increment(int j);
    void validate() const;
};

enum class PolicyKind { Greedy, Exploratory, AlphaMix, ScoreWindow };

struct PolicySpec {
    PolicyKind kind = PolicyKind::Greedy;
    double alpha = 1.0;   // AlphaMix: probability of the greedy component
    double window = 0.0;  // ScoreWindow: w >= 0, may be +inf
    double tie_tolerance = 1e-12;

    static PolicySpec greedy();
    static PolicySpec exploratory();
    static PolicySpec mix(double alpha);
    static PolicySpec score_window(double w);
    // "greedy", "exploratory", "mix:<alpha>", "window:<w>" (w may be "inf").
    static PolicySpec parse(const std::string& text);

    std::string name() const;
    void validate() const;
};

// beta_j^2 2^{-2 N_j} / 12 for informative j, 0 otherwise. Underflows to 0 for huge counts.
double gain(const ModelConfig& model, const CountState& state, int j);

// One uniform component of an action law.
struct ActionComponent {
    double weight = 0.0;
    std::vector<int> support;
};
using ActionMixture = std::vector<ActionComponent>;

// Greedy action set among the informative members (uniform tie class).
std::vector<int> greedy_set(const ModelConfig& model, std::span<const std::int64_t> counts,
                            std::span<const int> informative, double tie_tolerance);
// Population score-window set {j : gain_j >= 2^{-2w} max gain} among informative members.
std::vector<int> window_set(const ModelConfig& model, std::span<const std::int64_t> counts,
                            std::span<const int> informative, double w, double tie_tolerance);
// True when the window threshold 2^{-2w} is an exact power of two.
bool window_threshold_dyadic(double w);

ActionMixture action_mixture(const PolicySpec& policy, const ModelConfig& model,
                             std::span<const std::int64_t> counts, std::span<const int> mask);

// Probabilities aligned with `mask.members`.
std::vector<double> action_distribution(const PolicySpec& policy, const ModelConfig& model,
                                        const CountState& state, const Mask& mask);

int select(const PolicySpec& policy, const ModelConfig& model, std::span<const std::int64_t> counts,
           std::span<const int> mask, Rng& rng);

inline int select(const PolicySpec& policy, const ModelConfig& model, const CountState& state,
                  const Mask& mask, Rng& rng) {
    return select(policy, model, state.counts, mask.members, rng);
}

}  // namespace rfdyn

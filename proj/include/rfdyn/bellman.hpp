#pragma once

#include "rfdyn/environment.hpp"
#include "rfdyn/policies.hpp"
#include "rfdyn/rational.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace rfdyn {

using State = std::vector<std::int64_t>;

// InformativeReduced tracks only the s informative counts (noninformative splits leave the
// state unchanged); Full tracks all d counts.
enum class StateSpace { InformativeReduced, Full };

StateSpace default_space(const ModelConfig& model);  // reduced iff sigma0_sq == 0
const char* to_string(StateSpace space);

// Masks grouped by (u ∩ S, |u \ S|).
struct ExposureClass {
    std::vector<int> informative;  // sorted coordinates in u ∩ S
    int noninformative = 0;
    Rational prob;
};

std::vector<ExposureClass> exposure_classes(const ModelConfig& model);
// informative ∪ {s, ..., s + noninformative - 1}
std::vector<int> representative_mask(const ModelConfig& model, const ExposureClass& cls);

// Exact action law (coordinate, probability).
using ExactActionLaw = std::vector<std::pair<int, Rational>>;

// Markov decision rule on (depth, state, exposure class). In the full space, a class without
// informative members must return the class-averaged law over noninformative coordinates.
using DecisionRule = std::function<ExactActionLaw(std::int64_t, const State&, const ExposureClass&)>;

// Exact rule for a built-in policy. `exact_sets` (optional) is cleared when a window threshold
// is not a power of two, i.e. when action sets rely on floating comparison.
DecisionRule policy_rule(const ModelConfig& model, const PolicySpec& policy, StateSpace space,
                         bool* exact_sets = nullptr);

// Successor of `state` after splitting coordinate j.
State successor(const ModelConfig& model, StateSpace space, const State& state, int j);
State zero_state(const ModelConfig& model, StateSpace space);

template <class Scalar>
struct Law {
    StateSpace space = StateSpace::InformativeReduced;
    std::int64_t depth = 0;
    std::vector<State> support;  // sorted
    std::vector<Scalar> mass;
};

struct TerminalLaw : Law<Rational> {
    bool exact = true;
    Rational mass_of(const State& state) const;
    Rational total() const;
};

using RealLaw = Law<double>;

// Laws at every depth 0..l under a decision rule.
struct ForwardLaws {
    std::vector<std::map<State, Rational>> by_depth;
};

ForwardLaws forward_laws(const ModelConfig& model, const DecisionRule& rule, std::int64_t ell, StateSpace space);
TerminalLaw terminal_law_exact(const ModelConfig& model, const DecisionRule& rule, std::int64_t ell, StateSpace space);
TerminalLaw terminal_law_exact(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell);
TerminalLaw terminal_law_exact(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell, StateSpace space);

// (1 - eps) a + eps b on the union of supports.
TerminalLaw mix_laws(const TerminalLaw& a, const TerminalLaw& b, const Rational& eps);

// Empirical terminal frequencies from simulated branches.
RealLaw empirical_terminal_law(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell,
                               std::size_t branches, std::uint64_t seed, StateSpace space, unsigned threads = 1);

struct EnsembleObjective {
    std::function<Rational(const State&)> phi;
    std::function<Rational(const State&, const State&)> psi;  // empty means zero
    long B = 1;
    bool symmetric = true;
};

// Phi(n) = sum_{j<s} beta_j^2 2^{-2 n_j};
// Psi(n,n') = sum_{j<s} beta_j^2 2^{-2 max(n_j,n'_j)} + sigma0^2 (2^l / n0) 2^{-||n-n'||_1 / 2}.
EnsembleObjective default_objective(const ModelConfig& model, std::int64_t ell, long B, long n0 = 1);

Rational objective_J(const TerminalLaw& law, const EnsembleObjective& obj);
double objective_J(const RealLaw& law, const EnsembleObjective& obj);

// Gamma(n) = (1/B) Phi(n) + ((B-1)/B) sum_{n'} nu(n') (Psi(n,n') + Psi(n',n)).
std::function<Rational(const State&)> marginal_cost(const TerminalLaw& law, const EnsembleObjective& obj);

struct BellmanTable {
    StateSpace space = StateSpace::InformativeReduced;
    std::int64_t depth = 0;
    std::vector<ExposureClass> classes;
    std::vector<std::map<State, Rational>> values;  // t = 0..l

    const Rational& value(std::int64_t t, const State& state) const;
    // Bellman-minimising coordinates for (t, state, class); for a class without informative
    // members in the full space, minimisers among all noninformative coordinates.
    std::vector<int> argmin_actions(const ModelConfig& model, std::int64_t t, const State& state,
                                    std::size_t class_index) const;
};

BellmanTable bellman_backward(const ModelConfig& model, const std::function<Rational(const State&)>& h,
                              std::int64_t ell, StateSpace space);

struct Violation {
    std::int64_t depth = 0;
    State state;
    ExposureClass cls;
    int action = -1;
    Rational action_prob;
    int better_action = -1;
    Rational margin;  // V_{t+1}(n + e_action) - V_{t+1}(n + e_better) > 0
};

std::vector<Violation> certificate_scan(const ModelConfig& model, const DecisionRule& rule,
                                        const EnsembleObjective& obj, std::int64_t ell, StateSpace space);
std::vector<Violation> certificate_scan(const ModelConfig& model, const PolicySpec& policy,
                                        const EnsembleObjective& obj, std::int64_t ell);

struct CounterexampleReport {
    long B = 0;
    Rational epsilon;
    ModelConfig model;
    std::int64_t ell = 2;
    TerminalLaw eta_greedy;
    Rational q;
    Rational prob_event;  // P(Z_1 = (1,0), U_2 ∩ S = {1,2})
    Rational theta;       // epsilon * prob_event
    State a, b;           // (2,0), (1,1)
    Rational phi_a, phi_b, psi_aa, psi_ab, psi_bb;
    Rational expected_psi_difference;  // E[psi(a,Z) - psi(b,Z)], Z ~ eta_greedy
    Rational gamma_difference;         // Gamma(a) - Gamma(b)
    Rational gamma_difference_formula; // (29 - 2B) / (48 B)
    Rational quadratic_coefficient;    // psi(a,a) - 2 psi(a,b) + psi(b,b)
    Rational delta_J;                  // J of the perturbed policy's law minus J(eta_greedy)
    Rational delta_J_shifted_law;      // same, via eta_greedy + theta (delta_a - delta_b)
    Rational delta_J_expansion;        // theta * gamma_difference + theta^2 ((B-1)/B) * quadratic_coefficient
    bool descent = false;
    std::vector<Violation> violations;
};

CounterexampleReport reproduce_counterexample(long B, const Rational& epsilon);

struct PolicyDecision {
    std::int64_t depth = 0;
    State state;
    std::vector<int> class_informative;
    int action = -1;
};

struct SearchResult {
    Rational best_value;
    std::vector<PolicyDecision> best_policy;
    std::size_t policies = 0;
};

// Exhaustive search over deterministic Markov count-state policies (heuristic oracle for the
// nonlinear objective; exact for B = 1). Choices are enumerated at reachable (depth, state,
// class) points with at least two informative members.
SearchResult brute_force_policy_search(const ModelConfig& model, const EnsembleObjective& obj, std::int64_t ell,
                                       StateSpace space, std::size_t max_policies = 1000000);

struct PsdReport {
    std::vector<double> eigenvalues;  // of the symmetrised kernel on the zero-sum subspace
    double min_eigenvalue = 0.0;
    bool psd = true;
};

// Sufficient surrogate: PSD on all zero-sum vectors over the law's support.
PsdReport psd_diagnostic(const TerminalLaw& law, const EnsembleObjective& obj, double tol = 1e-12);

}  // namespace rfdyn

#include "rfdyn/bellman.hpp"
#include "rfdyn/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfdyn {

namespace {

constexpr unsigned long kMaxStates = 100000;

BigInt state_count(const ModelConfig& model, StateSpace space, std::int64_t t) {
    if (space == StateSpace::Full) return binomial(t + model.d - 1, model.d - 1);
    return binomial(t + model.s, model.s);
}

void guard_size(const ModelConfig& model, StateSpace space, std::int64_t ell) {
    if (ell < 0) throw std::invalid_argument("depth must be >= 0");
    BigInt n = state_count(model, space, ell);
    if (n > kMaxStates)
        throw SizeError("state space too large (" + n.get_str() + " states at depth " + std::to_string(ell) + ")");
}

void require_space(const ModelConfig& model, StateSpace space) {
    model.validate();
    if (space == StateSpace::InformativeReduced && model.sigma0_sq > 0.0)
        throw std::invalid_argument("the informative-reduced space requires sigma0_sq = 0");
}

// All states of the space at depth t.
std::vector<State> states_at_depth(const ModelConfig& model, StateSpace space, std::int64_t t) {
    std::vector<State> out;
    const int len = space == StateSpace::Full ? model.d : model.s;
    State cur(static_cast<std::size_t>(len), 0);
    std::function<void(int, std::int64_t)> rec = [&](int j, std::int64_t left) {
        if (j == len - 1) {
            if (space == StateSpace::Full) {
                cur[static_cast<std::size_t>(j)] = left;
                out.push_back(cur);
            } else {
                for (std::int64_t k = 0; k <= left; ++k) {
                    cur[static_cast<std::size_t>(j)] = k;
                    out.push_back(cur);
                }
            }
            return;
        }
        for (std::int64_t k = 0; k <= left; ++k) {
            cur[static_cast<std::size_t>(j)] = k;
            rec(j + 1, left - k);
        }
    };
    rec(0, t);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::int64_t> padded_counts(const ModelConfig& model, const State& state) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(model.d), 0);
    std::copy(state.begin(), state.end(), c.begin());
    return c;
}

Rational beta_sq(const ModelConfig& model, int j) {
    Rational b = exact(model.beta[static_cast<std::size_t>(j)]);
    return b * b;
}

}  // namespace

StateSpace default_space(const ModelConfig& model) {
    return model.sigma0_sq == 0.0 ? StateSpace::InformativeReduced : StateSpace::Full;
}

const char* to_string(StateSpace space) {
    return space == StateSpace::Full ? "full" : "informative-reduced";
}

std::vector<ExposureClass> exposure_classes(const ModelConfig& model) {
    model.validate();
    if (model.s > 24) throw SizeError("too many informative coordinates for exposure classes");
    std::vector<ExposureClass> out;
    const BigInt total = binomial(model.d, model.m);
    for (unsigned long bits = 0; bits < (1UL << model.s); ++bits) {
        ExposureClass c;
        for (int j = 0; j < model.s; ++j)
            if (bits & (1UL << j)) c.informative.push_back(j);
        int k = static_cast<int>(c.informative.size());
        c.noninformative = model.m - k;
        if (k > model.m || c.noninformative > model.d - model.s) continue;
        c.prob = Rational(binomial(model.d - model.s, c.noninformative), total);
        c.prob.canonicalize();
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<int> representative_mask(const ModelConfig& model, const ExposureClass& cls) {
    std::vector<int> mask = cls.informative;
    for (int k = 0; k < cls.noninformative; ++k) mask.push_back(model.s + k);
    return mask;
}

State zero_state(const ModelConfig& model, StateSpace space) {
    return State(static_cast<std::size_t>(space == StateSpace::Full ? model.d : model.s), 0);
}

State successor(const ModelConfig& model, StateSpace space, const State& state, int j) {
    if (j < 0 || j >= model.d) throw std::invalid_argument("successor: coordinate out of range");
    State next = state;
    if (space == StateSpace::Full || j < model.s) ++next[static_cast<std::size_t>(j)];
    return next;
}

DecisionRule policy_rule(const ModelConfig& model, const PolicySpec& policy, StateSpace space, bool* exact_sets) {
    model.validate();
    policy.validate();
    if (exact_sets)
        *exact_sets = !(policy.kind == PolicyKind::ScoreWindow && !window_threshold_dyadic(policy.window));
    return [model, policy, space](std::int64_t, const State& state, const ExposureClass& cls) {
        ExactActionLaw law;
        if (cls.informative.empty()) {
            if (space == StateSpace::InformativeReduced) return ExactActionLaw{{model.s, Rational(1)}};
            Rational each = frac(1, model.d - model.s);
            for (int j = model.s; j < model.d; ++j) law.emplace_back(j, each);
            return law;
        }
        auto counts = padded_counts(model, state);
        auto mask = representative_mask(model, cls);
        auto mixture = action_mixture(policy, model, counts, mask);
        std::vector<Rational> weights;
        if (policy.kind == PolicyKind::AlphaMix) {
            Rational a = exact(policy.alpha);
            if (policy.alpha > 0.0) weights.push_back(a);
            if (policy.alpha < 1.0) weights.push_back(Rational(1) - a);
        } else {
            weights.push_back(Rational(1));
        }
        std::map<int, Rational> acc;
        for (std::size_t c = 0; c < mixture.size(); ++c) {
            Rational each = weights[c] / static_cast<long>(mixture[c].support.size());
            for (int j : mixture[c].support) acc[j] += each;
        }
        for (auto& [j, p] : acc) law.emplace_back(j, p);
        return law;
    };
}

Rational TerminalLaw::mass_of(const State& state) const {
    auto it = std::lower_bound(support.begin(), support.end(), state);
    if (it == support.end() || *it != state) return Rational(0);
    return mass[static_cast<std::size_t>(it - support.begin())];
}

Rational TerminalLaw::total() const {
    Rational t(0);
    for (const auto& m : mass) t += m;
    return t;
}

ForwardLaws forward_laws(const ModelConfig& model, const DecisionRule& rule, std::int64_t ell, StateSpace space) {
    require_space(model, space);
    guard_size(model, space, ell);
    auto classes = exposure_classes(model);
    ForwardLaws fw;
    fw.by_depth.resize(static_cast<std::size_t>(ell + 1));
    fw.by_depth[0][zero_state(model, space)] = Rational(1);
    for (std::int64_t t = 0; t < ell; ++t) {
        auto& next = fw.by_depth[static_cast<std::size_t>(t + 1)];
        for (const auto& [state, mass] : fw.by_depth[static_cast<std::size_t>(t)]) {
            if (mass == 0) continue;
            for (const auto& cls : classes) {
                Rational w = mass * cls.prob;
                for (const auto& [j, p] : rule(t, state, cls)) {
                    if (p < 0) throw std::logic_error("decision rule returned a negative probability");
                    if (p == 0) continue;
                    next[successor(model, space, state, j)] += w * p;
                }
            }
        }
    }
    return fw;
}

TerminalLaw terminal_law_exact(const ModelConfig& model, const DecisionRule& rule, std::int64_t ell, StateSpace space) {
    auto fw = forward_laws(model, rule, ell, space);
    TerminalLaw law;
    law.space = space;
    law.depth = ell;
    for (const auto& [state, mass] : fw.by_depth.back()) {
        if (mass == 0) continue;
        law.support.push_back(state);
        law.mass.push_back(mass);
    }
    return law;
}

TerminalLaw terminal_law_exact(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell, StateSpace space) {
    bool exact_sets = true;
    auto rule = policy_rule(model, policy, space, &exact_sets);
    TerminalLaw law = terminal_law_exact(model, rule, ell, space);
    law.exact = exact_sets;
    return law;
}

TerminalLaw terminal_law_exact(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell) {
    return terminal_law_exact(model, policy, ell, default_space(model));
}

TerminalLaw mix_laws(const TerminalLaw& a, const TerminalLaw& b, const Rational& eps) {
    if (a.space != b.space || a.depth != b.depth) throw std::invalid_argument("mix_laws: incompatible laws");
    std::map<State, Rational> acc;
    for (std::size_t i = 0; i < a.support.size(); ++i) acc[a.support[i]] += (Rational(1) - eps) * a.mass[i];
    for (std::size_t i = 0; i < b.support.size(); ++i) acc[b.support[i]] += eps * b.mass[i];
    TerminalLaw out;
    out.space = a.space;
    out.depth = a.depth;
    out.exact = a.exact && b.exact;
    for (auto& [s, m] : acc) {
        if (m == 0) continue;
        out.support.push_back(s);
        out.mass.push_back(m);
    }
    return out;
}

RealLaw empirical_terminal_law(const ModelConfig& model, const PolicySpec& policy, std::int64_t ell,
                               std::size_t branches, std::uint64_t seed, StateSpace space, unsigned threads) {
    require_space(model, space);
    if (branches == 0) throw std::invalid_argument("empirical_terminal_law: branches must be positive");
    const std::size_t block = 10000;
    const std::size_t blocks = (branches + block - 1) / block;
    std::vector<std::map<State, std::size_t>> counts(blocks);
    const std::size_t len = space == StateSpace::Full ? static_cast<std::size_t>(model.d) : static_cast<std::size_t>(model.s);
    parallel_for(blocks, threads, [&](std::size_t b) {
        Rng rng = make_rng(seed, b);
        MaskSampler sampler(model.d, model.m);
        std::vector<std::int64_t> n(static_cast<std::size_t>(model.d));
        std::size_t lo = b * block, hi = std::min(branches, lo + block);
        for (std::size_t i = lo; i < hi; ++i) {
            std::fill(n.begin(), n.end(), 0);
            for (std::int64_t t = 0; t < ell; ++t) {
                const auto& mask = sampler.draw(rng);
                ++n[static_cast<std::size_t>(select(policy, model, n, mask, rng))];
            }
            ++counts[b][State(n.begin(), n.begin() + static_cast<std::ptrdiff_t>(len))];
        }
    });
    std::map<State, std::size_t> total;
    for (const auto& c : counts)
        for (const auto& [s, k] : c) total[s] += k;
    RealLaw law;
    law.space = space;
    law.depth = ell;
    for (const auto& [s, k] : total) {
        law.support.push_back(s);
        law.mass.push_back(static_cast<double>(k) / static_cast<double>(branches));
    }
    return law;
}

EnsembleObjective default_objective(const ModelConfig& model, std::int64_t ell, long B, long n0) {
    model.validate();
    if (B < 1) throw std::invalid_argument("B must be >= 1");
    if (n0 < 1) throw std::invalid_argument("n0 must be >= 1");
    std::vector<Rational> b2;
    for (int j = 0; j < model.s; ++j) b2.push_back(beta_sq(model, j));
    const int s = model.s;
    EnsembleObjective obj;
    obj.B = B;
    obj.symmetric = true;
    obj.phi = [b2, s](const State& n) {
        Rational v(0);
        for (int j = 0; j < s; ++j) v += b2[static_cast<std::size_t>(j)] * pow2(-2 * n[static_cast<std::size_t>(j)]);
        return v;
    };
    Rational noise = exact(model.sigma0_sq) * pow2(ell) / n0;
    bool has_noise = model.sigma0_sq > 0.0;
    obj.psi = [b2, s, noise, has_noise](const State& n, const State& m) {
        Rational v(0);
        for (int j = 0; j < s; ++j) {
            auto mx = std::max(n[static_cast<std::size_t>(j)], m[static_cast<std::size_t>(j)]);
            v += b2[static_cast<std::size_t>(j)] * pow2(-2 * mx);
        }
        if (has_noise) {
            if (n.size() != m.size()) throw std::invalid_argument("psi: state length mismatch");
            std::int64_t dist = 0;
            for (std::size_t j = 0; j < n.size(); ++j) dist += std::abs(n[j] - m[j]);
            if (dist % 2 != 0) throw std::domain_error("psi: odd l1 distance gives an irrational kernel value");
            v += noise * pow2(-dist / 2);
        }
        return v;
    };
    return obj;
}

Rational objective_J(const TerminalLaw& law, const EnsembleObjective& obj) {
    if (obj.B < 1) throw std::invalid_argument("objective_J: B must be >= 1");
    Rational first(0), second(0);
    for (std::size_t i = 0; i < law.support.size(); ++i) first += law.mass[i] * obj.phi(law.support[i]);
    if (obj.B > 1 && obj.psi) {
        for (std::size_t i = 0; i < law.support.size(); ++i) {
            Rational row(0);
            for (std::size_t k = 0; k < law.support.size(); ++k) row += law.mass[k] * obj.psi(law.support[i], law.support[k]);
            second += law.mass[i] * row;
        }
    }
    return first / obj.B + frac(obj.B - 1, obj.B) * second;
}

double objective_J(const RealLaw& law, const EnsembleObjective& obj) {
    if (obj.B < 1) throw std::invalid_argument("objective_J: B must be >= 1");
    double first = 0.0, second = 0.0;
    for (std::size_t i = 0; i < law.support.size(); ++i) first += law.mass[i] * obj.phi(law.support[i]).get_d();
    if (obj.B > 1 && obj.psi) {
        for (std::size_t i = 0; i < law.support.size(); ++i) {
            double row = 0.0;
            for (std::size_t k = 0; k < law.support.size(); ++k)
                row += law.mass[k] * obj.psi(law.support[i], law.support[k]).get_d();
            second += law.mass[i] * row;
        }
    }
    return first / static_cast<double>(obj.B) + (static_cast<double>(obj.B - 1) / static_cast<double>(obj.B)) * second;
}

std::function<Rational(const State&)> marginal_cost(const TerminalLaw& law, const EnsembleObjective& obj) {
    if (obj.B < 1) throw std::invalid_argument("marginal_cost: B must be >= 1");
    return [law, obj](const State& n) {
        Rational v = obj.phi(n) / obj.B;
        if (obj.B > 1 && obj.psi) {
            Rational integral(0);
            for (std::size_t k = 0; k < law.support.size(); ++k)
                integral += law.mass[k] * (obj.psi(n, law.support[k]) + obj.psi(law.support[k], n));
            v += frac(obj.B - 1, obj.B) * integral;
        }
        return v;
    };
}

const Rational& BellmanTable::value(std::int64_t t, const State& state) const {
    if (t < 0 || t > depth) throw std::out_of_range("BellmanTable::value: depth out of range");
    auto it = values[static_cast<std::size_t>(t)].find(state);
    if (it == values[static_cast<std::size_t>(t)].end()) throw std::out_of_range("BellmanTable::value: unknown state");
    return it->second;
}

std::vector<int> BellmanTable::argmin_actions(const ModelConfig& model, std::int64_t t, const State& state,
                                              std::size_t class_index) const {
    if (t >= depth) throw std::out_of_range("argmin_actions: no decision at the terminal depth");
    const auto& cls = classes.at(class_index);
    std::vector<int> candidates = cls.informative;
    if (candidates.empty()) {
        if (space == StateSpace::InformativeReduced) return {model.s};
        for (int j = model.s; j < model.d; ++j) candidates.push_back(j);
    }
    std::vector<int> best;
    Rational vmin;
    for (int j : candidates) {
        const Rational& v = value(t + 1, successor(model, space, state, j));
        if (best.empty() || v < vmin) {
            best = {j};
            vmin = v;
        } else if (v == vmin) {
            best.push_back(j);
        }
    }
    return best;
}

BellmanTable bellman_backward(const ModelConfig& model, const std::function<Rational(const State&)>& h,
                              std::int64_t ell, StateSpace space) {
    require_space(model, space);
    guard_size(model, space, ell);
    BellmanTable table;
    table.space = space;
    table.depth = ell;
    table.classes = exposure_classes(model);
    table.values.resize(static_cast<std::size_t>(ell + 1));
    for (const auto& n : states_at_depth(model, space, ell)) table.values.back()[n] = h(n);

    const int D = model.d - model.s;
    std::vector<Rational> order_weight;  // P(min over a uniform m-subset is the i-th smallest)
    if (space == StateSpace::Full && D >= model.m) {
        BigInt total = binomial(D, model.m);
        for (int i = 1; i <= D; ++i) order_weight.emplace_back(binomial(D - i, model.m - 1), total);
        for (auto& w : order_weight) w.canonicalize();
    }

    for (std::int64_t t = ell - 1; t >= 0; --t) {
        const auto& next = table.values[static_cast<std::size_t>(t + 1)];
        auto& cur = table.values[static_cast<std::size_t>(t)];
        auto at = [&](const State& s) -> const Rational& { return next.at(s); };
        for (const auto& n : states_at_depth(model, space, t)) {
            Rational v(0);
            for (const auto& cls : table.classes) {
                if (!cls.informative.empty()) {
                    Rational best = at(successor(model, space, n, cls.informative[0]));
                    for (std::size_t i = 1; i < cls.informative.size(); ++i) {
                        const Rational& c = at(successor(model, space, n, cls.informative[i]));
                        if (c < best) best = c;
                    }
                    v += cls.prob * best;
                } else if (space == StateSpace::InformativeReduced) {
                    v += cls.prob * at(n);
                } else {
                    std::vector<Rational> vals;
                    for (int j = model.s; j < model.d; ++j) vals.push_back(at(successor(model, space, n, j)));
                    std::sort(vals.begin(), vals.end());
                    Rational e(0);
                    for (std::size_t i = 0; i < vals.size(); ++i) e += order_weight[i] * vals[i];
                    v += cls.prob * e;
                }
            }
            cur[n] = v;
        }
    }
    return table;
}

std::vector<Violation> certificate_scan(const ModelConfig& model, const DecisionRule& rule, const EnsembleObjective& obj,
                                        std::int64_t ell, StateSpace space) {
    auto fw = forward_laws(model, rule, ell, space);
    TerminalLaw law;
    law.space = space;
    law.depth = ell;
    for (const auto& [s, m] : fw.by_depth.back()) {
        if (m == 0) continue;
        law.support.push_back(s);
        law.mass.push_back(m);
    }
    auto gamma = marginal_cost(law, obj);
    auto table = bellman_backward(model, gamma, ell, space);
    std::vector<Violation> out;
    for (std::int64_t t = 0; t < ell; ++t) {
        for (const auto& [state, mass] : fw.by_depth[static_cast<std::size_t>(t)]) {
            if (mass == 0) continue;
            for (std::size_t ci = 0; ci < table.classes.size(); ++ci) {
                const auto& cls = table.classes[ci];
                if (cls.informative.empty() && (space == StateSpace::InformativeReduced || model.m < 2)) continue;
                auto best = table.argmin_actions(model, t, state, ci);
                const Rational& vmin = table.value(t + 1, successor(model, space, state, best.front()));
                for (const auto& [j, p] : rule(t, state, cls)) {
                    if (p == 0) continue;
                    const Rational& v = table.value(t + 1, successor(model, space, state, j));
                    if (v > vmin) out.push_back({t, state, cls, j, p, best.front(), v - vmin});
                }
            }
        }
    }
    return out;
}

std::vector<Violation> certificate_scan(const ModelConfig& model, const PolicySpec& policy, const EnsembleObjective& obj,
                                        std::int64_t ell) {
    StateSpace space = default_space(model);
    return certificate_scan(model, policy_rule(model, policy, space), obj, ell, space);
}

CounterexampleReport reproduce_counterexample(long B, const Rational& epsilon) {
    if (B < 2) throw std::invalid_argument("reproduce_counterexample: B must be >= 2");
    if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("reproduce_counterexample: epsilon must lie in (0, 1)");
    CounterexampleReport r;
    r.B = B;
    r.epsilon = epsilon;
    r.model = ModelConfig::make(6, 2, 4, {1.0, 1.0}, 0.0);
    r.ell = 2;
    const auto space = StateSpace::InformativeReduced;
    auto greedy = policy_rule(r.model, PolicySpec::greedy(), space);
    r.eta_greedy = terminal_law_exact(r.model, greedy, r.ell, space);
    r.q = opportunity_rate(6, 2, 4);

    const State z1{1, 0};
    auto fw = forward_laws(r.model, greedy, r.ell, space);
    Rational both;
    for (const auto& cls : exposure_classes(r.model))
        if (cls.informative.size() == 2) both = cls.prob;
    r.prob_event = fw.by_depth[1].at(z1) * both;
    r.theta = epsilon * r.prob_event;

    auto obj = default_objective(r.model, r.ell, B);
    r.a = {2, 0};
    r.b = {1, 1};
    r.phi_a = obj.phi(r.a);
    r.phi_b = obj.phi(r.b);
    r.psi_aa = obj.psi(r.a, r.a);
    r.psi_ab = obj.psi(r.a, r.b);
    r.psi_bb = obj.psi(r.b, r.b);
    r.expected_psi_difference = 0;
    for (std::size_t i = 0; i < r.eta_greedy.support.size(); ++i)
        r.expected_psi_difference +=
            r.eta_greedy.mass[i] * (obj.psi(r.a, r.eta_greedy.support[i]) - obj.psi(r.b, r.eta_greedy.support[i]));
    auto gamma = marginal_cost(r.eta_greedy, obj);
    r.gamma_difference = gamma(r.a) - gamma(r.b);
    r.gamma_difference_formula = frac(29 - 2 * B, 48 * B);
    r.quadratic_coefficient = r.psi_aa - 2 * r.psi_ab + r.psi_bb;

    DecisionRule perturbed = [greedy, z1, epsilon](std::int64_t t, const State& s, const ExposureClass& cls) {
        if (t == 1 && s == z1 && cls.informative == std::vector<int>{0, 1})
            return ExactActionLaw{{0, epsilon}, {1, Rational(1) - epsilon}};
        return greedy(t, s, cls);
    };
    auto eta_eps = terminal_law_exact(r.model, perturbed, r.ell, space);
    Rational j_greedy = objective_J(r.eta_greedy, obj);
    r.delta_J = objective_J(eta_eps, obj) - j_greedy;

    TerminalLaw shifted = r.eta_greedy;
    for (std::size_t i = 0; i < shifted.support.size(); ++i) {
        if (shifted.support[i] == r.a) shifted.mass[i] += r.theta;
        if (shifted.support[i] == r.b) shifted.mass[i] -= r.theta;
    }
    r.delta_J_shifted_law = objective_J(shifted, obj) - j_greedy;
    r.delta_J_expansion =
        r.theta * r.gamma_difference + r.theta * r.theta * frac(B - 1, B) * r.quadratic_coefficient;
    r.descent = r.delta_J < 0;
    r.violations = certificate_scan(r.model, greedy, obj, r.ell, space);
    return r;
}

namespace {

struct SearchState {
    const ModelConfig* model;
    const EnsembleObjective* obj;
    StateSpace space;
    std::int64_t ell;
    std::size_t max_policies;
    std::vector<ExposureClass> classes;
    SearchResult result;
    bool have_best = false;
    std::vector<PolicyDecision> stack;
};

void forced_law(const SearchState& st, const State& state, const ExposureClass& cls, const Rational& w,
                std::map<State, Rational>& next) {
    const auto& model = *st.model;
    if (!cls.informative.empty()) {
        next[successor(model, st.space, state, cls.informative[0])] += w;
    } else if (st.space == StateSpace::InformativeReduced) {
        next[state] += w;
    } else {
        Rational each = w / (model.d - model.s);
        for (int j = model.s; j < model.d; ++j) next[successor(model, st.space, state, j)] += each;
    }
}

void search(SearchState& st, std::int64_t t, const std::map<State, Rational>& law) {
    if (t == st.ell) {
        if (++st.result.policies > st.max_policies) throw SizeError("too many deterministic policies to enumerate");
        TerminalLaw tl;
        tl.space = st.space;
        tl.depth = t;
        for (const auto& [s, m] : law) {
            tl.support.push_back(s);
            tl.mass.push_back(m);
        }
        Rational j = objective_J(tl, *st.obj);
        if (!st.have_best || j < st.result.best_value) {
            st.have_best = true;
            st.result.best_value = j;
            st.result.best_policy = st.stack;
        }
        return;
    }
    struct Point {
        const State* state;
        Rational mass;
        const ExposureClass* cls;
    };
    std::vector<Point> points;
    std::map<State, Rational> fixed;
    for (const auto& [state, mass] : law) {
        if (mass == 0) continue;
        for (const auto& cls : st.classes) {
            if (cls.informative.size() >= 2)
                points.push_back({&state, mass * cls.prob, &cls});
            else
                forced_law(st, state, cls, mass * cls.prob, fixed);
        }
    }
    std::vector<std::size_t> digit(points.size(), 0);
    const std::size_t base_size = st.stack.size();
    for (;;) {
        std::map<State, Rational> next = fixed;
        st.stack.resize(base_size);
        for (std::size_t i = 0; i < points.size(); ++i) {
            int j = points[i].cls->informative[digit[i]];
            next[successor(*st.model, st.space, *points[i].state, j)] += points[i].mass;
            st.stack.push_back({t, *points[i].state, points[i].cls->informative, j});
        }
        search(st, t + 1, next);
        std::size_t i = 0;
        while (i < points.size() && ++digit[i] == points[i].cls->informative.size()) digit[i++] = 0;
        if (i == points.size()) break;
    }
    st.stack.resize(base_size);
}

}  // namespace

SearchResult brute_force_policy_search(const ModelConfig& model, const EnsembleObjective& obj, std::int64_t ell,
                                       StateSpace space, std::size_t max_policies) {
    require_space(model, space);
    guard_size(model, space, ell);
    SearchState st{&model, &obj, space, ell, max_policies, exposure_classes(model), {}, false, {}};
    std::map<State, Rational> law{{zero_state(model, space), Rational(1)}};
    search(st, 0, law);
    return st.result;
}

PsdReport psd_diagnostic(const TerminalLaw& law, const EnsembleObjective& obj, double tol) {
    PsdReport rep;
    const auto n = static_cast<Eigen::Index>(law.support.size());
    if (n < 2 || !obj.psi) return rep;
    Eigen::MatrixXd Q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto& a = law.support[static_cast<std::size_t>(i)];
            const auto& b = law.support[static_cast<std::size_t>(k)];
            Q(i, k) = Rational((obj.psi(a, b) + obj.psi(b, a)) / 2).get_d();
        }
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        V(i, i) = 1.0;
        V(n - 1, i) = -1.0;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
    Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(n, n - 1);
    Eigen::MatrixXd R = basis.transpose() * Q * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (R + R.transpose()));
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) rep.eigenvalues.push_back(es.eigenvalues()(i));
    rep.min_eigenvalue = rep.eigenvalues.front();
    rep.psd = rep.min_eigenvalue >= -tol;
    return rep;
}

}  // namespace rfdyn

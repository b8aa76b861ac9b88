#include "rfdyn/cli.hpp"
#include "rfdyn/bellman.hpp"
#include "rfdyn/dynamics.hpp"
#include "rfdyn/environment.hpp"
#include "rfdyn/forest.hpp"
#include "rfdyn/poisson.hpp"
#include "rfdyn/risk.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace rfdyn {

namespace {

using json = nlohmann::json;

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& text) {
    std::string t = trim(text);
    if (t == "inf" || t == "+inf" || t == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + text + "'");
    }
    if (used != t.size()) throw UsageError("not a number: '" + text + "'");
    return v;
}

long long parse_integer(const std::string& text) {
    std::string t = trim(text);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &used);
    } catch (const std::exception&) {
        throw UsageError("not an integer: '" + text + "'");
    }
    if (used != t.size()) throw UsageError("not an integer: '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(text);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

std::vector<double> real_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& t : split_list(text)) out.push_back(parse_real(t));
    return out;
}

std::vector<std::int64_t> integer_list(const std::string& text) {
    std::vector<std::int64_t> out;
    for (const auto& t : split_list(text)) out.push_back(parse_integer(t));
    return out;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

json rat(const Rational& r) { return to_string(r); }

json one_based(const std::vector<int>& coords) {
    json a = json::array();
    for (int j : coords) a.push_back(j + 1);
    return a;
}

json state_json(const State& s) {
    json a = json::array();
    for (auto v : s) a.push_back(v);
    return a;
}

struct ModelArgs {
    int d = 0, s = 0, m = 0;
    double gamma = 0.0;
    std::string beta;
    double sigma0_sq = 0.0;
    CLI::Option* m_opt = nullptr;
    CLI::Option* gamma_opt = nullptr;

    void add(CLI::App* app, bool with_noise = true) {
        app->add_option("--d", d, "ambient dimension")->required();
        app->add_option("--s", s, "number of informative coordinates")->required();
        m_opt = app->add_option("--m", m, "candidate-set size");
        gamma_opt = app->add_option("--gamma", gamma, "candidate fraction, m = ceil(gamma d)");
        app->add_option("--beta", beta, "comma-separated coefficients (default all ones)");
        if (with_noise) app->add_option("--sigma0-sq", sigma0_sq, "noise variance");
    }

    ModelConfig build() const {
        if ((m_opt->count() > 0) == (gamma_opt->count() > 0)) throw UsageError("give exactly one of --m and --gamma");
        int mm = m_opt->count() > 0 ? m : ModelConfig::m_from_gamma(d, gamma);
        return ModelConfig::make(d, s, mm, beta.empty() ? std::vector<double>{} : real_list(beta), sigma0_sq);
    }
};

struct Globals {
    std::uint64_t seed = 0;
    unsigned threads = default_threads();
    std::string out;
    std::string config;
    std::string format;
};

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : fallback_; }

private:
    std::ofstream file_;
    std::ostream& fallback_;
};

StateSpace parse_space(const std::string& text, const ModelConfig& model) {
    if (text == "auto") return default_space(model);
    if (text == "reduced") return StateSpace::InformativeReduced;
    if (text == "full") return StateSpace::Full;
    throw UsageError("--space must be auto, reduced or full");
}

json violations_json(const std::vector<Violation>& vs) {
    json a = json::array();
    for (const auto& v : vs)
        a.push_back({{"depth", v.depth},
                     {"state", state_json(v.state)},
                     {"exposure", one_based(v.cls.informative)},
                     {"noninformative_members", v.cls.noninformative},
                     {"action", v.action + 1},
                     {"action_probability", rat(v.action_prob)},
                     {"better_action", v.better_action + 1},
                     {"margin", rat(v.margin)}});
    return a;
}

json law_json(const TerminalLaw& law) {
    json a = json::array();
    for (std::size_t i = 0; i < law.support.size(); ++i)
        a.push_back({{"state", state_json(law.support[i])}, {"mass", rat(law.mass[i])}});
    return a;
}

json identity_checks() {
    json out;
    double worst = 0.0;
    for (int ell = 1; ell <= 8; ++ell)
        for (double p : {0.2, 0.5, 0.8})
            for (double r : {0.25, std::pow(2.0, -1.0), std::pow(2.0, -2.0 / 3.0)}) {
                auto mb = max_binomial_exact(ell, p, r);
                worst = std::max(worst, std::abs(mb.enumeration - mb.closed_form));
            }
    out["max_binomial"] = {{"max_abs_error", worst}, {"tolerance", 1e-10}, {"passes", worst < 1e-10}};
    worst = 0.0;
    for (int ell = 1; ell <= 6; ++ell)
        for (int d = 2; d <= 4; ++d)
            for (double r : {0.25, 0.5}) {
                std::vector<double> p(static_cast<std::size_t>(d));
                for (int j = 0; j < d; ++j) p[static_cast<std::size_t>(j)] = (j + 1.0) / (d * (d + 1) / 2.0);
                double lhs = L_functional(ell, d, r, p).value;
                double rhs = std::pow(r, ell) * min_multinomial_exact(ell, d, p, 1.0 / r);
                worst = std::max(worst, std::abs(lhs - rhs));
            }
    out["min_multinomial"] = {{"identity", "L(l,d,r,p) = r^l E[(1/r)^{sum min}]"},
                              {"max_abs_error", worst},
                              {"tolerance", 1e-8},
                              {"passes", worst < 1e-8}};
    worst = 0.0;
    for (double rho : {0.3, 0.5, 0.7, std::sqrt(0.5)})
        for (int k = 0; k <= 10; ++k)
            worst = std::max(worst, std::abs(kernel_fourier_coefficient(rho, k) - std::pow(rho, k)));
    out["fourier"] = {{"max_abs_error", worst}, {"tolerance", 1e-10}, {"passes", worst < 1e-10}};
    return out;
}

std::vector<std::string> with_config(const std::vector<std::string>& args) {
    std::string path;
    std::size_t at = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            at = i;
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            at = i;
            break;
        }
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto extra = config_to_args(buf.str());
    static const std::set<std::string> names{"env",        "simulate", "drift",   "expmoment", "allocation",
                                             "poisson",    "risk",     "bellman", "law",       "objective",
                                             "certify",    "counterexample",      "search",    "forest",
                                             "heatmap"};
    std::size_t insert = 0;
    for (std::size_t i = 0; i < at; ++i)
        if (names.count(args[i])) insert = i + 1;
    std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(insert));
    out.insert(out.end(), extra.begin(), extra.end());
    out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(insert), args.end());
    return out;
}

}  // namespace

std::vector<std::string> config_to_args(const std::string& text) {
    std::vector<std::string> out;
    auto key_flag = [](std::string k) {
        std::replace(k.begin(), k.end(), '_', '-');
        return "--" + k;
    };
    std::string t = trim(text);
    if (!t.empty() && t.front() == '{') {
        json j;
        try {
            j = json::parse(t);
        } catch (const json::exception& e) {
            throw UsageError(std::string("bad JSON config: ") + e.what());
        }
        for (auto& [k, v] : j.items()) {
            if (v.is_boolean()) {
                if (v.get<bool>()) out.push_back(key_flag(k));
                continue;
            }
            out.push_back(key_flag(k));
            if (v.is_array()) {
                std::string joined;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) joined += ",";
                    joined += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
                }
                out.push_back(joined);
            } else {
                out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            }
        }
        return out;
    }
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError("bad config line: " + line);
        std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
        v.erase(std::remove(v.begin(), v.end(), '"'), v.end());
        v.erase(std::remove(v.begin(), v.end(), ' '), v.end());
        if (v == "true") {
            out.push_back(key_flag(k));
            continue;
        }
        if (v == "false") continue;
        out.push_back(key_flag(k));
        out.push_back(v);
    }
    return out;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Masked-opportunity split dynamics, exact terminal laws and random-forest experiments", "rfdyn"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.fallthrough();
    app.require_subcommand(1);

    Globals g;
    app.add_option("--seed", g.seed, "master seed (default 0)");
    app.add_option("--threads", g.threads, "worker threads (results do not depend on this)");
    app.add_option("--out", g.out, "output path (default standard output)");
    app.add_option("--config", g.config, "JSON or key=value file of flag values; explicit flags override");
    app.add_option("--format", g.format, "csv or json where both are supported");

    std::function<void(std::ostream&)> action;

    // env
    auto* env = app.add_subcommand("env", "opportunity rate, drift constant and the eta_req check");
    ModelArgs env_model;
    env_model.add(env, false);
    env->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = env_model.build();
            json j;
            j["d"] = m.d;
            j["s"] = m.s;
            j["m"] = m.m;
            j["q"] = rat(opportunity_rate(m.d, m.s, m.m));
            auto c = drift_constant_cstar(m.d, m.s, m.m);
            j["cstar"] = static_cast<double>(c.value);
            j["cstar_kernel"] = rat(c.kernel);
            j["nondegenerate"] = c.nondegenerate;
            json pmf = json::array();
            for (int k = 0; k <= std::min(m.s, m.m); ++k) pmf.push_back(rat(hypergeom_pmf(m.d, m.s, m.m, k)));
            j["hypergeometric_pmf"] = pmf;
            if (m.s >= 2) {
                auto r = check_etareq(m.d, m.s, m.m);
                j["eta_req"] = r.eta_req;
                j["threshold"] = r.threshold;
                j["passes"] = r.passes;
            } else {
                j["eta_req"] = nullptr;
                j["threshold"] = nullptr;
                j["passes"] = nullptr;
            }
            os << j.dump() << "\n";
        };
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "one branch of the count process, one CSV row per step");
    ModelArgs sim_model;
    sim_model.add(sim, false);
    std::string sim_policy = "greedy";
    std::int64_t sim_ell = 10;
    sim->add_option("--policy", sim_policy, "greedy|exploratory|mix:<a>|window:<w>");
    sim->add_option("--ell", sim_ell, "number of splits")->required();
    sim->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = sim_model.build();
            Rng rng = make_rng(g.seed, 0);
            auto tr = run_branch(m, PolicySpec::parse(sim_policy), sim_ell, rng);
            os << "t,chosen,informative,clock,mask,counts\n";
            for (const auto& st : tr.steps) {
                os << st.t << "," << st.chosen + 1 << "," << (st.informative ? 1 : 0) << ","
                   << tr.clock[static_cast<std::size_t>(st.t)] << ",";
                for (std::size_t i = 0; i < st.mask.size(); ++i) os << (i ? " " : "") << st.mask[i] + 1;
                os << ",";
                const auto& c = tr.counts[static_cast<std::size_t>(st.t)];
                for (std::size_t i = 0; i < c.size(); ++i) os << (i ? " " : "") << c[i];
                os << "\n";
            }
        };
    });

    // drift
    auto* drift = app.add_subcommand("drift", "conditional drift of the imbalance and the contraction estimate");
    ModelArgs drift_model;
    drift_model.add(drift, false);
    std::string drift_policy = "greedy";
    std::int64_t drift_horizon = 1000;
    std::size_t drift_reps = 100, drift_min = 100;
    drift->add_option("--policy", drift_policy, "policy");
    drift->add_option("--horizon", drift_horizon, "informative steps per replicate");
    drift->add_option("--reps", drift_reps, "replicates (>= 100)");
    drift->add_option("--min-count", drift_min, "samples needed for a bucket to count");
    drift->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = drift_model.build();
            auto rep = estimate_drift_and_kappa(m, PolicySpec::parse(drift_policy), drift_horizon, drift_reps, g.seed,
                                                g.threads, drift_min);
            auto key_str = [](const std::vector<std::int64_t>& k) {
                std::string s;
                for (std::size_t i = 0; i < k.size(); ++i) s += (i ? " " : "") + std::to_string(k[i]);
                return s;
            };
            if (g.format == "json") {
                json b = json::array();
                for (const auto& x : rep.buckets)
                    b.push_back({{"scaled_delta", x.key}, {"W", x.W}, {"count", x.raw.count}, {"mean", x.raw.mean},
                                 {"se", x.raw.se}, {"shifted_mean", x.shifted.mean}, {"shifted_se", x.shifted.se},
                                 {"excluded", x.excluded}});
                json j{{"buckets", b},
                       {"kappa_hat", rep.kappa_hat},
                       {"kappa_se", rep.kappa_se},
                       {"steps", rep.steps},
                       {"merged_permutations", rep.merged_permutations},
                       {"cstar", static_cast<double>(drift_constant_cstar(m.d, m.s, m.m).value)}};
                os << j.dump() << "\n";
                return;
            }
            os << "W_bucket,scaled_delta,count,mean,se,shifted_mean,shifted_se,excluded\n";
            for (const auto& x : rep.buckets)
                os << fmt(x.W) << "," << key_str(x.key) << "," << x.raw.count << "," << fmt(x.raw.mean) << ","
                   << fmt(x.raw.se) << "," << fmt(x.shifted.mean) << "," << fmt(x.shifted.se) << ","
                   << (x.excluded ? 1 : 0) << "\n";
            err << "kappa_hat=" << fmt(rep.kappa_hat) << " kappa_se=" << fmt(rep.kappa_se) << "\n";
        };
    });

    // expmoment
    auto* expm = app.add_subcommand("expmoment", "Monte Carlo E[exp(eta W_n)] along an n grid");
    ModelArgs expm_model;
    expm_model.add(expm, false);
    std::string expm_policy = "greedy", expm_grid = "100,500,1000,2000";
    double expm_eta = 0.5;
    std::size_t expm_reps = 10000;
    expm->add_option("--policy", expm_policy, "policy");
    expm->add_option("--eta", expm_eta, "exponent");
    expm->add_option("--n-grid", expm_grid, "comma-separated informative times");
    expm->add_option("--reps", expm_reps, "replicates");
    expm->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = expm_model.build();
            auto pts = exp_moment_diag(m, PolicySpec::parse(expm_policy), expm_eta, integer_list(expm_grid), expm_reps,
                                       g.seed, g.threads);
            os << "n,mean,se\n";
            for (const auto& p : pts) os << p.n << "," << fmt(p.value.mean) << "," << fmt(p.value.se) << "\n";
        };
    });

    // allocation
    auto* alloc = app.add_subcommand("allocation", "empirical allocation N_t/t against its limit");
    ModelArgs alloc_model;
    alloc_model.add(alloc, false);
    std::string alloc_policy = "greedy";
    std::int64_t alloc_t = 100000;
    std::size_t alloc_runs = 1;
    alloc->add_option("--policy", alloc_policy, "policy");
    alloc->add_option("--t", alloc_t, "branch length");
    alloc->add_option("--runs", alloc_runs, "independent branches averaged");
    alloc->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = alloc_model.build();
            std::vector<Trajectory> trs;
            for (std::size_t r = 0; r < alloc_runs; ++r) {
                Rng rng = make_rng(g.seed, r);
                trs.push_back(run_branch(m, PolicySpec::parse(alloc_policy), alloc_t, rng));
            }
            auto sum = summarize_allocation(trs);
            os << "coordinate,empirical,target\n";
            for (std::size_t j = 0; j < sum.target.size(); ++j)
                os << j + 1 << "," << fmt(sum.empirical[j]) << "," << fmt(sum.target[j]) << "\n";
        };
    });

    // poisson
    auto* pois = app.add_subcommand("poisson", "Poisson-kernel functionals F and L");
    std::vector<std::string> pois_F, pois_L;
    bool pois_check = false;
    std::size_t pois_samples = 100000;
    pois->add_option("--F", pois_F, "l,r,alpha (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    pois->add_option("--L", pois_L, "l,d,r,p1,...,pd (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    pois->add_flag("--check-identities", pois_check, "verify the functional identities on fixed grids");
    pois->add_option("--samples", pois_samples, "Monte Carlo draws for L when d > 4");
    pois->callback([&] {
        action = [&](std::ostream& os) {
            json j;
            j["F"] = json::array();
            j["L"] = json::array();
            for (const auto& f : pois_F) {
                auto v = real_list(f);
                if (v.size() != 3) throw UsageError("--F expects l,r,alpha");
                j["F"].push_back({{"ell", static_cast<long>(v[0])}, {"r", v[1]}, {"alpha", v[2]},
                                  {"value", F_functional(static_cast<long>(v[0]), v[1], v[2])}});
            }
            for (const auto& l : pois_L) {
                auto v = real_list(l);
                if (v.size() < 3) throw UsageError("--L expects l,d,r,p1,...,pd");
                int d = static_cast<int>(v[1]);
                std::vector<double> p(v.begin() + 3, v.end());
                LOptions o;
                o.mc_samples = pois_samples;
                o.seed = g.seed;
                o.threads = g.threads;
                auto r = L_functional(static_cast<long>(v[0]), d, v[2], p, o);
                j["L"].push_back({{"ell", static_cast<long>(v[0])}, {"d", d}, {"r", v[2]}, {"p", p}, {"value", r.value}, {"se", r.se},
                                  {"method", r.monte_carlo ? "monte-carlo" : "quadrature"}});
            }
            if (pois_check) j["identities"] = identity_checks();
            os << j.dump() << "\n";
        };
    });

    // risk
    auto* risk = app.add_subcommand("risk", "Monte Carlo risk functionals and closed-form bound terms");
    ModelArgs risk_model;
    risk_model.add(risk);
    std::string risk_policies = "greedy,exploratory", risk_ell = "2,4,6,8";
    std::size_t risk_reps = 10000;
    long risk_B = 100, risk_n0 = 500;
    risk->add_option("--policy", risk_policies, "comma-separated policies");
    risk->add_option("--ell", risk_ell, "comma-separated depths");
    risk->add_option("--reps", risk_reps, "independent tree pairs (>= 1000)");
    risk->add_option("--B", risk_B, "trees in the ensemble");
    risk->add_option("--n0", risk_n0, "sample size");
    risk->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = risk_model.build();
            os << "policy,ell,single_tree_bias,single_tree_bias_se,cross_tree_bias,cross_tree_bias_se,overlap,"
                  "overlap_se,bound_kind,bias1,bias2,F_value,L_value,L_se,varterm,remainder,etareq_passes\n";
            for (const auto& pname : split_list(risk_policies)) {
                auto pol = PolicySpec::parse(pname);
                for (auto ell : integer_list(risk_ell)) {
                    auto f = estimate_functionals(m, pol, ell, risk_reps, g.seed, g.threads);
                    LOptions o;
                    o.seed = g.seed;
                    o.threads = g.threads;
                    auto b = pol.kind == PolicyKind::Exploratory ? benchmark_bound_terms(m, ell, risk_B, risk_n0, o)
                                                                 : cart_bound_terms(m, ell, risk_B, risk_n0, o);
                    os << pname << "," << ell << "," << fmt(f.single_tree_bias.mean) << ","
                       << fmt(f.single_tree_bias.se) << "," << fmt(f.cross_tree_bias.mean) << ","
                       << fmt(f.cross_tree_bias.se) << "," << fmt(f.overlap.mean) << "," << fmt(f.overlap.se) << ","
                       << b.kind << "," << fmt(b.bias1) << "," << fmt(b.bias2) << "," << fmt(b.F_value) << ","
                       << fmt(b.L.value) << "," << fmt(b.L.se) << "," << fmt(b.varterm) << "," << fmt(b.remainder)
                       << "," << (b.etareq_passes ? 1 : 0) << "\n";
                }
            }
        };
    });

    // bellman
    auto* bell = app.add_subcommand("bellman", "exact terminal laws, objective, certificates and policy search");
    bell->require_subcommand(1);
    struct BellArgs {
        ModelArgs model;
        std::string policy = "greedy";
        std::int64_t ell = 2;
        long B = 2;
        long n0 = 1;
        std::string space = "auto";
    };
    auto add_bell = [&](CLI::App* sub, BellArgs& a, bool policy, bool objective) {
        a.model.add(sub);
        if (policy) sub->add_option("--policy", a.policy, "policy");
        sub->add_option("--ell", a.ell, "depth")->required();
        if (objective) {
            sub->add_option("--B", a.B, "trees in the ensemble");
            sub->add_option("--n0", a.n0, "sample size in the noise term");
        }
        sub->add_option("--space", a.space, "auto|reduced|full");
    };

    auto* law = bell->add_subcommand("law", "exact terminal split-count law");
    BellArgs law_args;
    add_bell(law, law_args, true, false);
    law->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = law_args.model.build();
            auto space = parse_space(law_args.space, m);
            auto tl = terminal_law_exact(m, PolicySpec::parse(law_args.policy), law_args.ell, space);
            json j{{"space", to_string(space)}, {"ell", law_args.ell}, {"exact_action_sets", tl.exact},
                   {"total", rat(tl.total())}, {"support", law_json(tl)}};
            os << j.dump() << "\n";
        };
    });

    auto* objc = bell->add_subcommand("objective", "ensemble objective J of a policy's terminal law");
    BellArgs obj_args;
    add_bell(objc, obj_args, true, true);
    objc->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = obj_args.model.build();
            auto space = parse_space(obj_args.space, m);
            auto tl = terminal_law_exact(m, PolicySpec::parse(obj_args.policy), obj_args.ell, space);
            auto obj = default_objective(m, obj_args.ell, obj_args.B, obj_args.n0);
            Rational J = objective_J(tl, obj);
            json j{{"J", rat(J)}, {"J_decimal", J.get_d()}, {"B", obj_args.B}, {"space", to_string(space)}};
            os << j.dump() << "\n";
        };
    });

    auto* cert = bell->add_subcommand("certify", "Bellman certificate scan for a policy");
    BellArgs cert_args;
    add_bell(cert, cert_args, true, true);
    cert->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = cert_args.model.build();
            auto space = parse_space(cert_args.space, m);
            auto rule = policy_rule(m, PolicySpec::parse(cert_args.policy), space);
            auto obj = default_objective(m, cert_args.ell, cert_args.B, cert_args.n0);
            auto vs = certificate_scan(m, rule, obj, cert_args.ell, space);
            json j{{"violations", violations_json(vs)},
                   {"nonoptimal", !vs.empty()},
                   {"note", "an empty list does not certify optimality"}};
            os << j.dump() << "\n";
        };
    });

    auto* cex = bell->add_subcommand("counterexample", "exact reproduction of the greedy counterexample");
    long cex_B = 15;
    std::string cex_eps = "1/100";
    cex->add_option("--B", cex_B, "trees in the ensemble (>= 2)");
    cex->add_option("--epsilon", cex_eps, "perturbation size, rational or decimal");
    cex->callback([&] {
        action = [&](std::ostream& os) {
            auto r = reproduce_counterexample(cex_B, parse_rational(cex_eps));
            json eta = json::object();
            for (std::size_t i = 0; i < r.eta_greedy.support.size(); ++i) {
                const auto& s = r.eta_greedy.support[i];
                eta["(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + ")"] = rat(r.eta_greedy.mass[i]);
            }
            auto psd = psd_diagnostic(r.eta_greedy, default_objective(r.model, r.ell, r.B));
            json j{{"B", r.B},
                   {"epsilon", rat(r.epsilon)},
                   {"q", rat(r.q)},
                   {"eta_greedy", eta},
                   {"P_event", rat(r.prob_event)},
                   {"theta", rat(r.theta)},
                   {"phi_a", rat(r.phi_a)},
                   {"phi_b", rat(r.phi_b)},
                   {"psi_aa", rat(r.psi_aa)},
                   {"psi_ab", rat(r.psi_ab)},
                   {"psi_bb", rat(r.psi_bb)},
                   {"expected_psi_difference", rat(r.expected_psi_difference)},
                   {"gamma_difference", rat(r.gamma_difference)},
                   {"gamma_difference_formula", rat(r.gamma_difference_formula)},
                   {"quadratic_coefficient", rat(r.quadratic_coefficient)},
                   {"delta_J", rat(r.delta_J)},
                   {"delta_J_decimal", r.delta_J.get_d()},
                   {"delta_J_expansion", rat(r.delta_J_expansion)},
                   {"delta_J_shifted_law", rat(r.delta_J_shifted_law)},
                   {"descent", r.descent},
                   {"violations", violations_json(r.violations)},
                   {"psd_surrogate", {{"eigenvalues", psd.eigenvalues}, {"psd", psd.psd},
                                      {"scope", "all zero-sum vectors on the greedy support"}}}};
            os << j.dump() << "\n";
        };
    });

    auto* search = bell->add_subcommand("search", "exhaustive deterministic Markov policy search");
    BellArgs search_args;
    add_bell(search, search_args, false, true);
    std::size_t search_max = 1000000;
    search->add_option("--max-policies", search_max, "enumeration limit");
    search->callback([&] {
        action = [&](std::ostream& os) {
            ModelConfig m = search_args.model.build();
            auto space = parse_space(search_args.space, m);
            auto obj = default_objective(m, search_args.ell, search_args.B, search_args.n0);
            auto res = brute_force_policy_search(m, obj, search_args.ell, space, search_max);
            Rational greedy = objective_J(terminal_law_exact(m, PolicySpec::greedy(), search_args.ell, space), obj);
            json pol = json::array();
            for (const auto& d : res.best_policy)
                pol.push_back({{"depth", d.depth}, {"state", state_json(d.state)},
                               {"exposure", one_based(d.class_informative)}, {"action", d.action + 1}});
            json j{{"best_value", rat(res.best_value)},
                   {"greedy_value", rat(greedy)},
                   {"gap", rat(greedy - res.best_value)},
                   {"policies", res.policies},
                   {"best_policy", pol},
                   {"note", "deterministic Markov count-state policies only"}};
            os << j.dump() << "\n";
        };
    });

    // forest
    auto* forest = app.add_subcommand("forest", "empirical random-forest experiments");
    forest->require_subcommand(1);
    auto* heat = forest->add_subcommand("heatmap", "(gamma, w) test-MSE heatmap");
    int f_d = 100, f_s = 5;
    std::string f_beta, f_gamma = "0.02,0.05,0.1,0.2,0.4,0.6,0.8,1.0", f_w = "0,0.5,1,2,4,8,inf";
    double f_snr = 2.0;
    ForestParams fp;
    std::size_t f_reps = 20;
    heat->add_option("--d", f_d, "ambient dimension");
    heat->add_option("--s", f_s, "informative coordinates");
    heat->add_option("--beta", f_beta, "comma-separated coefficients (default all ones)");
    heat->add_option("--n0", fp.n0, "size of each of the split and estimation samples");
    heat->add_option("--ell", fp.ell, "tree depth");
    heat->add_option("--min-leaf", fp.min_leaf, "minimum split-sample points per child");
    heat->add_option("--B", fp.B, "trees per forest");
    heat->add_option("--n-test", fp.n_test, "test points");
    heat->add_option("--gamma-grid", f_gamma, "comma-separated gamma values");
    heat->add_option("--w-grid", f_w, "comma-separated w values (inf allowed)");
    heat->add_option("--snr", f_snr, "||beta||_2 / sigma0");
    heat->add_option("--reps", f_reps, "replications per cell");
    heat->callback([&] {
        action = [&](std::ostream& os) {
            ExperimentGrid grid;
            grid.gamma_grid = real_list(f_gamma);
            grid.w_grid = real_list(f_w);
            grid.snr = f_snr;
            grid.reps = f_reps;
            auto rows = heatmap_experiment(grid, f_d, f_s, f_beta.empty() ? std::vector<double>{} : real_list(f_beta),
                                           fp, g.seed, g.threads);
            os << heatmap_csv(rows);
        };
    });

    try {
        std::vector<std::string> args = with_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << "\n" << app.help();
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    if (!g.format.empty() && g.format != "csv" && g.format != "json") {
        err << "error: --format must be csv or json\n";
        return 2;
    }
    if (g.threads == 0) g.threads = 1;
    try {
        if (!action) throw UsageError("no subcommand selected");
        Output o(g.out, out);
        action(o.stream());
        o.stream().flush();
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace rfdyn

#include "rfdyn/environment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace rfdyn {

Rational parse_rational(const std::string& text) {
    std::string t = text;
    t.erase(std::remove_if(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); }), t.end());
    if (t.empty()) throw std::invalid_argument("empty rational");
    if (t.find('/') != std::string::npos) {
        Rational r;
        if (r.set_str(t, 10) != 0) throw std::invalid_argument("bad rational: " + text);
        if (r.get_den() == 0) throw std::invalid_argument("zero denominator: " + text);
        r.canonicalize();
        return r;
    }
    std::size_t epos = t.find_first_of("eE");
    std::string mant = t.substr(0, epos);
    long exp10 = 0;
    if (epos != std::string::npos) {
        std::size_t used = 0;
        exp10 = std::stol(t.substr(epos + 1), &used);
        if (used != t.size() - epos - 1) throw std::invalid_argument("bad number: " + text);
    }
    bool neg = false;
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
        neg = mant[0] == '-';
        mant = mant.substr(1);
    }
    std::size_t dot = mant.find('.');
    std::string digits = mant;
    if (dot != std::string::npos) {
        digits = mant.substr(0, dot) + mant.substr(dot + 1);
        exp10 -= static_cast<long>(mant.size() - dot - 1);
    }
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); }))
        throw std::invalid_argument("bad number: " + text);
    BigInt num(digits, 10);
    BigInt scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
    Rational r = exp10 >= 0 ? Rational(num * scale) : frac(num, scale);
    r.canonicalize();
    return neg ? Rational(-r) : r;
}

void ModelConfig::validate() const {
    if (d < 1) throw std::invalid_argument("d must be positive");
    if (s < 1 || s > d) throw std::invalid_argument("s must satisfy 1 <= s <= d");
    if (m < 1 || m > d) throw std::invalid_argument("m must satisfy 1 <= m <= d");
    if (static_cast<int>(beta.size()) != s) throw std::invalid_argument("beta must have s entries");
    for (double b : beta)
        if (!(b != 0.0) || !std::isfinite(b)) throw std::invalid_argument("beta entries must be finite and nonzero");
    if (!(sigma0_sq >= 0.0) || !std::isfinite(sigma0_sq)) throw std::invalid_argument("sigma0_sq must be >= 0");
}

bool ModelConfig::equal_beta() const {
    for (double b : beta)
        if (b * b != beta[0] * beta[0]) return false;
    return true;
}

ModelConfig ModelConfig::make(int d, int s, int m, std::vector<double> beta, double sigma0_sq) {
    ModelConfig c;
    c.d = d;
    c.s = s;
    c.m = m;
    c.beta = beta.empty() ? std::vector<double>(static_cast<std::size_t>(std::max(s, 0)), 1.0) : std::move(beta);
    c.sigma0_sq = sigma0_sq;
    c.validate();
    return c;
}

int ModelConfig::m_from_gamma(int d, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
    int m = static_cast<int>(std::ceil(gamma * d - 1e-9));
    return std::clamp(m, 1, d);
}

Mask sample_mask(Rng& rng, int d, int m) {
    if (d < 1 || m < 1 || m > d) throw std::invalid_argument("sample_mask: need 1 <= m <= d");
    MaskSampler sampler(d, m);
    Mask mask{sampler.draw(rng)};
    std::sort(mask.members.begin(), mask.members.end());
    return mask;
}

MaskSampler::MaskSampler(int d, int m) : m_(m), perm_(static_cast<std::size_t>(d)), out_(static_cast<std::size_t>(m)) {
    if (d < 1 || m < 1 || m > d) throw std::invalid_argument("MaskSampler: need 1 <= m <= d");
    std::iota(perm_.begin(), perm_.end(), 0);
}

const std::vector<int>& MaskSampler::draw(Rng& rng) {
    const std::size_t n = perm_.size();
    for (std::size_t i = 0; i < static_cast<std::size_t>(m_); ++i) {
        std::size_t j = i + uniform_index(rng, n - i);
        std::swap(perm_[i], perm_[j]);
        out_[i] = perm_[i];
    }
    return out_;
}

Rational opportunity_rate(int d, int s, int m) {
    ModelConfig::make(d, s, m);
    return Rational(1) - frac(binomial(d - s, m), binomial(d, m));
}

Rational hypergeom_pmf(int d, int s, int m, int k) {
    ModelConfig::make(d, s, m);
    if (k < 0 || k > std::min(s, m)) return Rational(0);
    Rational r(binomial(s, k) * binomial(d - s, m - k), binomial(d, m));
    r.canonicalize();
    return r;
}

DriftConstant drift_constant_cstar(int d, int s, int m) {
    DriftConstant out;
    Rational q = opportunity_rate(d, s, m);
    if (s < 2 || q == 0) return out;
    Rational kernel(0);
    for (int k = 2; k <= std::min(s, m); ++k) kernel += Rational(k - 1) * hypergeom_pmf(d, s, m, k);
    kernel /= q;
    out.kernel = kernel;
    out.nondegenerate = kernel > 0;
    // Long-double value of the kernel: leading double plus a correction term.
    mpf_class k(kernel, 128);
    double hi = k.get_d();
    mpf_class lo = k - mpf_class(hi, 128);
    long double kv = static_cast<long double>(hi) + static_cast<long double>(lo.get_d());
    long double sm1 = static_cast<long double>(s - 1);
    out.value = kv / (static_cast<long double>(s) * sm1 * std::sqrt(sm1));
    return out;
}

EtaReqReport check_etareq(int d, int s, int m) {
    if (s < 2) throw std::invalid_argument("check_etareq: requires s >= 2");
    EtaReqReport r;
    const double ln2 = std::log(2.0);
    r.eta_req = std::max(2.0 * ln2, std::sqrt(static_cast<double>(s)) * ln2 / 2.0);
    r.threshold = (1.0 - 1.0 / s) * r.eta_req / 4.0;
    r.cstar = static_cast<double>(drift_constant_cstar(d, s, m).value);
    r.passes = r.cstar > r.threshold;
    return r;
}

std::vector<double> allocation_target(int d, int s, int m) {
    double q = opportunity_rate(d, s, m).get_d();
    std::vector<double> pi(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) pi[static_cast<std::size_t>(j)] = j < s ? q / s : (1.0 - q) / (d - s);
    return pi;
}

}  // namespace rfdyn

#include "rfdyn/poisson.hpp"
#include "rfdyn/rational.hpp"
#include "rfdyn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace rfdyn {

namespace {

constexpr double kPi = std::numbers::pi;

void check_rho(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("kernel parameter must lie in (0, 1)");
}

void check_r(double r) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("r must lie in (0, 1)");
}

int pow2_at_least(double x, int lo, int hi) {
    int p = lo;
    while (p < hi && p < x) p *= 2;
    return p;
}

}  // namespace

GaussRule gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    GaussRule g;
    g.x.resize(static_cast<std::size_t>(n));
    g.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - z * z) * pp * pp);
        g.x[static_cast<std::size_t>(i)] = -z;
        g.x[static_cast<std::size_t>(n - 1 - i)] = z;
        g.w[static_cast<std::size_t>(i)] = w;
        g.w[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    cache[n] = g;
    return g;
}

GaussRule composite_rule(double a, double b, int panels, int n) {
    GaussRule base = gauss_legendre(n);
    GaussRule out;
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * h;
        for (int i = 0; i < n; ++i) {
            out.x.push_back(lo + 0.5 * h * (base.x[static_cast<std::size_t>(i)] + 1.0));
            out.w.push_back(0.5 * h * base.w[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol, int panels0, int max_panels) {
    auto eval = [&](int panels) {
        GaussRule r = composite_rule(a, b, panels);
        double s = 0.0;
        for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(r.x[i]);
        return s;
    };
    int panels = std::max(1, panels0);
    double prev = eval(panels);
    double diff = 0.0;
    while (panels < max_panels) {
        panels *= 2;
        double cur = eval(panels);
        diff = std::abs(cur - prev);
        if (diff < tol) return cur;
        prev = cur;
    }
    throw QuadratureError("quadrature did not converge", diff);
}

double kernel_density(double rho, double theta) {
    check_rho(rho);
    return (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(theta) + rho * rho) / (2.0 * kPi);
}

double sample_kernel(double rho, Rng& rng) {
    check_rho(rho);
    double u = uniform01(rng);
    return 2.0 * std::atan((1.0 - rho) / (1.0 + rho) * std::tan(kPi * (u - 0.5)));
}

double kernel_fourier_coefficient(double rho, int k, double tol) {
    check_rho(rho);
    int panels0 = pow2_at_least(2.0 * kPi / std::max(1e-3, 1.0 - rho), 4, 1 << 12);
    return 2.0 * integrate([&](double t) { return std::cos(k * t) * kernel_density(rho, t); }, 0.0, kPi, tol, panels0);
}

double F_functional(long ell, double r, double alpha, double tol) {
    if (ell < 0) throw std::invalid_argument("F_functional: l must be >= 0");
    check_r(r);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("F_functional: alpha must lie in [0, 1]");
    if (ell == 0 || alpha == 0.0 || alpha == 1.0) return 1.0;
    const double rho = std::sqrt(r);
    const double c = 4.0 * alpha * (1.0 - alpha);
    auto f = [&](double xi) {
        double s = std::sin(0.5 * xi);
        double mod2 = 1.0 - c * s * s;
        double g = mod2 <= 0.0 ? 0.0 : std::exp(static_cast<double>(ell) * std::log1p(-c * s * s));
        return g * kernel_density(rho, xi);
    };
    double width = std::min(1.0 / std::sqrt(static_cast<double>(ell) * c + 1.0), 1.0 - rho);
    int panels0 = pow2_at_least(kPi / (4.0 * width), 4, 1 << 14);
    return 2.0 * integrate(f, 0.0, kPi, tol, panels0, 1 << 18);
}

void validate_simplex(const std::vector<double>& p) {
    if (p.empty()) throw std::invalid_argument("probability vector is empty");
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0)) throw std::invalid_argument("probability entries must be >= 0");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("probability vector must sum to 1");
}

namespace {

// |sum p_j e^{i phi_j}|^{2l} with phi_0 = 0.
double modulus_power(long ell, const std::vector<double>& p, const double* cs, const double* sn) {
    double re = p[0], im = 0.0;
    for (std::size_t j = 1; j < p.size(); ++j) {
        re += p[j] * cs[j - 1];
        im += p[j] * sn[j - 1];
    }
    double m2 = re * re + im * im;
    if (m2 <= 0.0) return 0.0;
    return std::exp(static_cast<double>(ell) * std::log(m2));
}

double L_quadrature(long ell, const std::vector<double>& p, double rho, double tol) {
    const int d = static_cast<int>(p.size());
    const int dims = d - 1;
    const int n_inner = static_cast<int>(std::ceil(45.0 / -std::log(rho))) + 16;
    std::vector<double> theta(static_cast<std::size_t>(n_inner)), base(static_cast<std::size_t>(n_inner));
    for (int i = 0; i < n_inner; ++i) {
        theta[static_cast<std::size_t>(i)] = -kPi + 2.0 * kPi * i / n_inner;
        base[static_cast<std::size_t>(i)] = kernel_density(rho, theta[static_cast<std::size_t>(i)]) * 2.0 * kPi / n_inner;
    }
    double pmin = 1.0;
    for (double x : p)
        if (x > 0.0) pmin = std::min(pmin, x);
    double width = std::min(1.0 / std::sqrt(static_cast<double>(ell) * pmin + 1.0), 1.0 - rho);
    const int max_panels = dims == 1 ? (1 << 14) : dims == 2 ? 256 : 32;
    int panels = pow2_at_least(kPi / (4.0 * width), 2, max_panels);

    auto eval = [&](int P) {
        GaussRule g = composite_rule(-kPi, kPi, P);
        const std::size_t n1 = g.x.size();
        const std::size_t ni = static_cast<std::size_t>(n_inner);
        std::vector<double> K(n1 * ni), cs(n1), sn(n1);
        for (std::size_t a = 0; a < n1; ++a) {
            cs[a] = std::cos(g.x[a]);
            sn[a] = std::sin(g.x[a]);
            for (std::size_t i = 0; i < ni; ++i) K[a * ni + i] = kernel_density(rho, theta[i] + g.x[a]);
        }
        double total = 0.0;
        double c3[3], s3[3];
        if (dims == 1) {
            for (std::size_t a = 0; a < n1; ++a) {
                double h = 0.0;
                for (std::size_t i = 0; i < ni; ++i) h += base[i] * K[a * ni + i];
                c3[0] = cs[a];
                s3[0] = sn[a];
                total += g.w[a] * h * modulus_power(ell, p, c3, s3);
            }
        } else if (dims == 2) {
            std::vector<double> M(ni);
            for (std::size_t a = 0; a < n1; ++a) {
                for (std::size_t i = 0; i < ni; ++i) M[i] = base[i] * K[a * ni + i];
                double row = 0.0;
                for (std::size_t b = 0; b < n1; ++b) {
                    double h = 0.0;
                    const double* kb = &K[b * ni];
                    for (std::size_t i = 0; i < ni; ++i) h += M[i] * kb[i];
                    c3[0] = cs[a]; s3[0] = sn[a];
                    c3[1] = cs[b]; s3[1] = sn[b];
                    row += g.w[b] * h * modulus_power(ell, p, c3, s3);
                }
                total += g.w[a] * row;
            }
        } else {
            std::vector<double> M(ni), MK(ni);
            for (std::size_t a = 0; a < n1; ++a) {
                for (std::size_t i = 0; i < ni; ++i) M[i] = base[i] * K[a * ni + i];
                double plane = 0.0;
                for (std::size_t b = 0; b < n1; ++b) {
                    const double* kb = &K[b * ni];
                    for (std::size_t i = 0; i < ni; ++i) MK[i] = M[i] * kb[i];
                    double row = 0.0;
                    for (std::size_t c = 0; c < n1; ++c) {
                        double h = 0.0;
                        const double* kc = &K[c * ni];
                        for (std::size_t i = 0; i < ni; ++i) h += MK[i] * kc[i];
                        c3[0] = cs[a]; s3[0] = sn[a];
                        c3[1] = cs[b]; s3[1] = sn[b];
                        c3[2] = cs[c]; s3[2] = sn[c];
                        row += g.w[c] * h * modulus_power(ell, p, c3, s3);
                    }
                    plane += g.w[b] * row;
                }
                total += g.w[a] * plane;
            }
        }
        return total;
    };

    double prev = eval(panels);
    double diff = 0.0;
    while (panels < max_panels) {
        panels *= 2;
        double cur = eval(panels);
        diff = std::abs(cur - prev);
        if (diff < tol) return cur;
        prev = cur;
    }
    throw QuadratureError("L_functional quadrature did not converge", diff);
}

}  // namespace

LValue L_functional(long ell, int d, double r, const std::vector<double>& p, const LOptions& opts) {
    if (ell < 0) throw std::invalid_argument("L_functional: l must be >= 0");
    if (d < 1 || static_cast<int>(p.size()) != d) throw std::invalid_argument("L_functional: p must have d entries");
    check_r(r);
    validate_simplex(p);
    LValue out;
    if (ell == 0 || d == 1) {
        out.value = 1.0;
        return out;
    }
    const double rho = std::sqrt(r);
    if (d <= opts.max_quadrature_dim && d <= 4) {
        double tol = opts.tol > 0.0 ? opts.tol : (d <= 3 ? 1e-12 : 1e-10);
        out.value = L_quadrature(ell, p, rho, tol);
        return out;
    }
    const std::size_t block = 4096;
    const std::size_t blocks = (opts.mc_samples + block - 1) / block;
    std::vector<double> vals(opts.mc_samples);
    parallel_for(blocks, opts.threads, [&](std::size_t b) {
        Rng rng = make_rng(opts.seed, b);
        std::size_t lo = b * block, hi = std::min(opts.mc_samples, lo + block);
        for (std::size_t i = lo; i < hi; ++i) {
            double re = 0.0, im = 0.0;
            for (int j = 0; j < d; ++j) {
                double t = sample_kernel(rho, rng);
                re += p[static_cast<std::size_t>(j)] * std::cos(t);
                im += p[static_cast<std::size_t>(j)] * std::sin(t);
            }
            double m2 = re * re + im * im;
            vals[i] = m2 <= 0.0 ? 0.0 : std::exp(static_cast<double>(ell) * std::log(m2));
        }
    });
    Estimate e = estimate(vals);
    out.value = e.mean;
    out.se = e.se;
    out.monte_carlo = true;
    return out;
}

std::complex<double> binom_pgf(long ell, double p, std::complex<double> z) {
    if (ell < 0) throw std::invalid_argument("binom_pgf: l must be >= 0");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binom_pgf: p must lie in [0, 1]");
    std::complex<double> base = 1.0 - p + p * z;
    std::complex<double> out = 1.0;
    for (long k = 0; k < ell; ++k) out *= base;
    return out;
}

namespace {

std::vector<double> binomial_pmf(long ell, double p) {
    std::vector<double> pmf(static_cast<std::size_t>(ell + 1), 0.0);
    if (p == 0.0) { pmf[0] = 1.0; return pmf; }
    if (p == 1.0) { pmf[static_cast<std::size_t>(ell)] = 1.0; return pmf; }
    for (long k = 0; k <= ell; ++k) {
        double lg = std::lgamma(ell + 1.0) - std::lgamma(k + 1.0) - std::lgamma(ell - k + 1.0);
        pmf[static_cast<std::size_t>(k)] = std::exp(lg + k * std::log(p) + (ell - k) * std::log1p(-p));
    }
    return pmf;
}

}  // namespace

MaxBinomial max_binomial_exact(long ell, double p, double r) {
    if (ell < 0 || ell > 2000) throw std::invalid_argument("max_binomial_exact: need 0 <= l <= 2000");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("max_binomial_exact: p must lie in [0, 1]");
    check_r(r);
    auto pmf = binomial_pmf(ell, p);
    std::vector<double> rp(static_cast<std::size_t>(ell + 1));
    for (long k = 0; k <= ell; ++k) rp[static_cast<std::size_t>(k)] = std::pow(r, static_cast<double>(k));
    MaxBinomial out;
    for (long i = 0; i <= ell; ++i)
        for (long j = 0; j <= ell; ++j)
            out.enumeration += pmf[static_cast<std::size_t>(i)] * pmf[static_cast<std::size_t>(j)] *
                               rp[static_cast<std::size_t>(std::max(i, j))];
    double sr = std::sqrt(r);
    double a = 1.0 - p + p * sr;
    out.closed_form = std::pow(a, 2.0 * static_cast<double>(ell)) * F_functional(ell, r, p * sr / a);
    return out;
}

MultinomialTable multinomial_table(long ell, int d, const std::vector<double>& p, std::size_t max_outcomes) {
    if (ell < 0) throw std::invalid_argument("multinomial_table: l must be >= 0");
    if (d < 1 || static_cast<int>(p.size()) != d) throw std::invalid_argument("multinomial_table: p must have d entries");
    validate_simplex(p);
    BigInt count = binomial(ell + d - 1, d - 1);
    if (count > static_cast<unsigned long>(max_outcomes))
        throw SizeError("too many multinomial outcomes (" + count.get_str() + "); use L_functional instead");
    MultinomialTable t;
    std::vector<int> a(static_cast<std::size_t>(d), 0);
    const double lf = std::lgamma(ell + 1.0);
    auto emit = [&]() {
        double lp = lf;
        for (int j = 0; j < d; ++j) {
            int k = a[static_cast<std::size_t>(j)];
            double pj = p[static_cast<std::size_t>(j)];
            if (k == 0) continue;
            if (pj == 0.0) return;
            lp += k * std::log(pj) - std::lgamma(k + 1.0);
        }
        t.outcomes.push_back(a);
        t.pmf.push_back(std::exp(lp));
    };
    // Enumerate compositions of ell into d parts in lexicographic order.
    std::function<void(int, long)> rec = [&](int j, long left) {
        if (j == d - 1) {
            a[static_cast<std::size_t>(j)] = static_cast<int>(left);
            emit();
            return;
        }
        for (long k = left; k >= 0; --k) {
            a[static_cast<std::size_t>(j)] = static_cast<int>(k);
            rec(j + 1, left - k);
        }
    };
    rec(0, ell);
    return t;
}

namespace {

template <class Weight>
double pair_sum(const MultinomialTable& t, Weight weight) {
    double total = 0.0;
    const std::size_t n = t.pmf.size();
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t k = 0; k < n; ++k) row += t.pmf[k] * weight(t.outcomes[i], t.outcomes[k]);
        total += t.pmf[i] * row;
    }
    return total;
}

}  // namespace

double min_multinomial_exact(long ell, int d, const std::vector<double>& p, double base) {
    if (!(base > 0.0) || !std::isfinite(base)) throw std::invalid_argument("min_multinomial_exact: base must be positive");
    auto t = multinomial_table(ell, d, p);
    std::vector<double> pw(static_cast<std::size_t>(ell + 1));
    for (long k = 0; k <= ell; ++k) pw[static_cast<std::size_t>(k)] = std::pow(base, static_cast<double>(k));
    return pair_sum(t, [&](const std::vector<int>& a, const std::vector<int>& b) {
        int s = 0;
        for (std::size_t j = 0; j < a.size(); ++j) s += std::min(a[j], b[j]);
        return pw[static_cast<std::size_t>(s)];
    });
}

double l1_damping_exact(long ell, int d, const std::vector<double>& p, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("l1_damping_exact: rho must lie in [0, 1]");
    auto t = multinomial_table(ell, d, p);
    std::vector<double> pw(static_cast<std::size_t>(2 * ell + 1));
    for (long k = 0; k <= 2 * ell; ++k) pw[static_cast<std::size_t>(k)] = std::pow(rho, static_cast<double>(k));
    return pair_sum(t, [&](const std::vector<int>& a, const std::vector<int>& b) {
        int s = 0;
        for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
        return pw[static_cast<std::size_t>(s)];
    });
}

}  // namespace rfdyn

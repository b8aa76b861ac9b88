#pragma once

#include <gmpxx.h>

#include <cmath>
#include <stdexcept>
#include <string>

namespace rfdyn {

using Rational = mpq_class;
using BigInt = mpz_class;

inline BigInt binomial(long n, long k) {
    if (k < 0 || n < 0 || k > n) return BigInt(0);
    BigInt r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return r;
}

// a / b in lowest terms.
inline Rational frac(const BigInt& a, const BigInt& b) {
    if (b == 0) throw std::invalid_argument("frac: zero denominator");
    Rational r(a, b);
    r.canonicalize();
    return r;
}

// Exact value of a finite double (every double is a dyadic rational).
inline Rational exact(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("exact: non-finite value");
    Rational r(x);
    r.canonicalize();
    return r;
}

// 2^e for any integer e.
inline Rational pow2(long e) {
    Rational r(1);
    if (e >= 0)
        mpz_mul_2exp(r.get_num_mpz_t(), r.get_num_mpz_t(), static_cast<mp_bitcnt_t>(e));
    else
        mpz_mul_2exp(r.get_den_mpz_t(), r.get_den_mpz_t(), static_cast<mp_bitcnt_t>(-e));
    return r;
}

inline Rational pow(const Rational& x, unsigned long k) {
    Rational r;
    mpz_pow_ui(r.get_num_mpz_t(), x.get_num_mpz_t(), k);
    mpz_pow_ui(r.get_den_mpz_t(), x.get_den_mpz_t(), k);
    return r;
}

// "p/q" in lowest terms, or "p" for integers.
inline std::string to_string(const Rational& x) { return x.get_str(); }

inline double to_double(const Rational& x) { return x.get_d(); }

// Parses "p/q", an integer, or a plain decimal such as "0.01" or "-1.5e-3" exactly.
Rational parse_rational(const std::string& text);

class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace rfdyn

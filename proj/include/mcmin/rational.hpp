#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "mcmin/errors.hpp"

namespace mcmin {

/// Arbitrary-precision rational, kept canonical (lowest terms, positive
/// denominator) by GMP. All exact-mode arithmetic goes through this type.
using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
    if (den == 0) throw McError("rational with zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

/// Parses "p/q" or "p" (optionally signed); accepts unreduced input.
inline Rational parse_rational(std::string_view text) {
    std::string s(text);
    if (s.empty()) throw McError("empty rational literal");
    Rational q;
    if (mpq_set_str(q.get_mpq_t(), s.c_str(), 10) != 0)
        throw McError("bad rational literal '" + s + "'");
    if (mpz_sgn(mpq_denref(q.get_mpq_t())) == 0)
        throw McError("rational with zero denominator '" + s + "'");
    q.canonicalize();
    return q;
}

/// Renders as "p/q" with the denominator always present ("0/1", "1/6", ...).
inline std::string rat_str(const Rational& q) {
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline double to_double(const Rational& q) { return q.get_d(); }

/// Numeric backend traits. The whole library is templated on the scalar
/// type S, which is either Rational (exact mode) or double (float mode
/// with the tolerances below).
template <class S>
struct num;

template <>
struct num<Rational> {
    static constexpr bool exact = true;
    static Rational zero() { return Rational(0); }
    static Rational one() { return Rational(1); }
    static Rational from_rational(const Rational& q) { return q; }
    static bool is_zero(const Rational& x) { return sgn(x) == 0; }
    static bool eq(const Rational& a, const Rational& b) { return a == b; }
    static bool sums_to_one(const Rational& s) { return s == 1; }
    /// Strict improvement test used by policy iteration.
    static bool improves(const Rational& candidate, const Rational& incumbent) {
        return candidate < incumbent;
    }
    /// Reduced-cost optimality test for the transportation simplex.
    static bool optimal_reduced_cost(const Rational& r) { return sgn(r) >= 0; }
    static bool marginal_ok(const Rational& got, const Rational& want) { return got == want; }
    static double as_double(const Rational& x) { return x.get_d(); }
};

template <>
struct num<double> {
    static constexpr bool exact = false;
    static constexpr double sum_tol = 1e-12;
    static constexpr double opt_tol = 1e-12;
    static constexpr double improve_tol = 1e-12;
    static constexpr double marginal_tol = 1e-9;
    static double zero() { return 0.0; }
    static double one() { return 1.0; }
    static double from_rational(const Rational& q) { return q.get_d(); }
    static bool is_zero(double x) { return x == 0.0; }
    static bool eq(double a, double b) { return std::fabs(a - b) <= sum_tol; }
    static bool sums_to_one(double s) { return std::fabs(s - 1.0) <= sum_tol; }
    static bool improves(double candidate, double incumbent) {
        return candidate < incumbent - improve_tol;
    }
    static bool optimal_reduced_cost(double r) { return r >= -opt_tol; }
    static bool marginal_ok(double got, double want) {
        return std::fabs(got - want) <= marginal_tol;
    }
    static double as_double(double x) { return x; }
};

/// splitmix64; used to derive per-row seeds in the bench harness so that
/// results are reproducible independently of row order.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace mcmin

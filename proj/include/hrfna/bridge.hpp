#pragma once

// Conversions between library values and oracle rationals. The only header
// that sees both sides.

#include <span>
#include <vector>

#include "hrfna/dyadic.hpp"
#include "hrfna/oracle.hpp"

namespace hrfna {

inline oracle::Rational to_rational(const Dyadic& v) {
    oracle::Rational r(mpz_class(v.mantissa().str(), 10));
    const auto e = v.exponent();
    if (e >= 0) {
        mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    } else {
        mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
    }
    return r;
}

inline std::vector<oracle::Rational> to_rationals(std::span<const Dyadic> xs) {
    std::vector<oracle::Rational> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(to_rational(x));
    return out;
}

/// |approx - exact| <= bound, decided exactly.
inline bool within(const Dyadic& approx, const oracle::Rational& exact, const Dyadic& bound) {
    return abs(to_rational(approx) - exact) <= to_rational(bound);
}

}  // namespace hrfna

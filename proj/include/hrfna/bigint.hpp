#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "hrfna/errors.hpp"

namespace hrfna {

using BigInt = boost::multiprecision::cpp_int;

inline std::size_t bit_length(const BigInt& v) {
    if (v == 0) return 0;
    return static_cast<std::size_t>(boost::multiprecision::msb(abs(v))) + 1;
}

inline BigInt pow2(std::size_t s) {
    BigInt r = 1;
    r <<= s;
    return r;
}

// floor(v / 2^s) for signed v; cpp_int's shift of negatives is not relied on.
inline BigInt floor_shift(const BigInt& v, std::size_t s) {
    if (v >= 0) return v >> s;
    BigInt mag = -v;
    BigInt q = mag >> s;
    if ((q << s) != mag) q += 1;
    return -q;
}

// ceil(v / 2^s) for v >= 0.
inline BigInt ceil_shift(const BigInt& v, std::size_t s) {
    BigInt q = v >> s;
    if ((q << s) != v) q += 1;
    return q;
}

/// Parses an optionally signed decimal integer; rejects anything else.
inline BigInt parse_bigint(std::string_view text) {
    std::size_t i = 0;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        negative = text[i] == '-';
        ++i;
    }
    if (i == text.size()) throw ParseError(0, "empty integer literal");
    BigInt out = 0;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') throw ParseError(0, "invalid digit in integer '" + std::string(text) + "'");
        out *= 10;
        out += c - '0';
    }
    return negative ? BigInt(-out) : out;
}

inline std::uint64_t gcd_u64(std::uint64_t a, std::uint64_t b) {
    while (b != 0) {
        const std::uint64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// a^e mod m with m < 2^32.
inline std::uint32_t pow_mod(std::uint64_t base, std::uint64_t e, std::uint32_t m) {
    std::uint64_t result = 1 % m;
    base %= m;
    while (e > 0) {
        if (e & 1U) result = result * base % m;
        base = base * base % m;
        e >>= 1U;
    }
    return static_cast<std::uint32_t>(result);
}

// Inverse of a modulo m via extended Euclid; requires gcd(a, m) = 1.
inline std::uint32_t inverse_mod(std::uint64_t a, std::uint32_t m) {
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = m, new_r = static_cast<std::int64_t>(a % m);
    while (new_r != 0) {
        const std::int64_t q = r / new_r;
        const std::int64_t tt = t - q * new_t;
        t = new_t;
        new_t = tt;
        const std::int64_t rr = r - q * new_r;
        r = new_r;
        new_r = rr;
    }
    if (r != 1) throw Error(ErrorCode::InvalidArgument, "value not invertible");
    if (t < 0) t += m;
    return static_cast<std::uint32_t>(t);
}

}  // namespace hrfna

#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include "hrfna/bigint.hpp"
#include "hrfna/dyadic.hpp"

namespace hrfna {

/// Exact rational num/den with den > 0, kept reduced.
struct Ratio {
    BigInt num = 0;
    BigInt den = 1;

    static Ratio make(BigInt n, BigInt d) {
        if (d == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        const BigInt g = boost::multiprecision::gcd(n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        return Ratio{std::move(n), std::move(d)};
    }

    static Ratio of(const Dyadic& v) {
        if (v.exponent() >= 0) {
            BigInt n = v.mantissa();
            n <<= static_cast<std::size_t>(v.exponent());
            return Ratio{std::move(n), 1};
        }
        return Ratio::make(v.mantissa(), pow2(static_cast<std::size_t>(-v.exponent())));
    }

    bool is_dyadic() const {
        return den > 0 && (den & (den - 1)) == 0;
    }

    std::optional<Dyadic> to_dyadic() const {
        if (!is_dyadic()) return std::nullopt;
        return Dyadic(num, -static_cast<std::int64_t>(bit_length(den) - 1));
    }

    friend bool operator==(const Ratio&, const Ratio&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::int64_t parse_small_int(std::string_view s) {
    const BigInt v = parse_bigint(s);
    if (bit_length(v) > 62) throw ParseError(0, "exponent out of range");
    return v.convert_to<std::int64_t>();
}

inline Ratio scale_pow(Ratio r, std::int64_t base, std::int64_t e) {
    const BigInt p = boost::multiprecision::pow(BigInt(base), static_cast<unsigned>(e < 0 ? -e : e));
    return e >= 0 ? Ratio::make(r.num * p, r.den) : Ratio::make(r.num, r.den * p);
}

// [sign] digits [. digits] [e [sign] digits]
inline Ratio parse_decimal(std::string_view s) {
    if (s.empty()) throw ParseError(0, "empty number");
    std::int64_t exp10 = 0;
    const auto epos = s.find_first_of("eE");
    if (epos != std::string_view::npos) {
        exp10 = parse_small_int(s.substr(epos + 1));
        s = s.substr(0, epos);
    }
    std::string digits;
    bool negative = false;
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        negative = s[i] == '-';
        ++i;
    }
    bool seen_point = false;
    bool seen_digit = false;
    for (; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '.' && !seen_point) {
            seen_point = true;
        } else if (c >= '0' && c <= '9') {
            digits.push_back(c);
            seen_digit = true;
            if (seen_point) --exp10;
        } else {
            throw ParseError(0, "invalid number '" + std::string(s) + "'");
        }
    }
    if (!seen_digit) throw ParseError(0, "invalid number '" + std::string(s) + "'");
    BigInt n = parse_bigint(digits);
    if (negative) n = -n;
    return scale_pow(Ratio::make(std::move(n), 1), 10, exp10);
}

}  // namespace detail

/// Parses "12", "-0.375", "1.5e-3", "3*2^-7", "2^-7" or "1/6" exactly.
inline Ratio parse_number(std::string_view text) {
    const std::string_view s = detail::trim(text);
    if (s.empty()) throw ParseError(0, "empty number");
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        const Ratio n = detail::parse_decimal(detail::trim(s.substr(0, slash)));
        const Ratio d = detail::parse_decimal(detail::trim(s.substr(slash + 1)));
        if (d.num == 0) throw ParseError(0, "zero denominator");
        return Ratio::make(n.num * d.den, n.den * d.num);
    }
    if (const auto star = s.find("*2^"); star != std::string_view::npos) {
        const Ratio a = detail::parse_decimal(detail::trim(s.substr(0, star)));
        return detail::scale_pow(a, 2, detail::parse_small_int(detail::trim(s.substr(star + 3))));
    }
    if (s.starts_with("2^")) return detail::scale_pow(Ratio{1, 1}, 2, detail::parse_small_int(s.substr(2)));
    return detail::parse_decimal(s);
}

}  // namespace hrfna

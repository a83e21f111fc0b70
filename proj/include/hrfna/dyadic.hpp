#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>

#include "hrfna/bigint.hpp"

namespace hrfna {

/// Exact value mantissa * 2^exponent.
///
/// Kept canonical (odd mantissa, or zero with exponent 0) so that equality of
/// values is equality of representations.
class Dyadic {
public:
    Dyadic() = default;

    explicit Dyadic(BigInt mantissa, std::int64_t exponent = 0)
        : mantissa_(std::move(mantissa)), exponent_(exponent) {
        canonicalize();
    }

    static Dyadic pow2(std::int64_t e) { return Dyadic(BigInt(1), e); }

    static Dyadic from_double(double v) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite value");
        if (v == 0.0) return Dyadic();
        int e = 0;
        const double frac = std::frexp(v, &e);
        const auto scaled = static_cast<std::int64_t>(std::ldexp(frac, 53));
        return Dyadic(BigInt(scaled), static_cast<std::int64_t>(e) - 53);
    }

    const BigInt& mantissa() const noexcept { return mantissa_; }
    std::int64_t exponent() const noexcept { return exponent_; }
    bool is_zero() const { return mantissa_ == 0; }
    int sign() const { return mantissa_ < 0 ? -1 : (mantissa_ > 0 ? 1 : 0); }

    Dyadic abs() const { return Dyadic(boost::multiprecision::abs(mantissa_), exponent_); }
    Dyadic operator-() const { return Dyadic(BigInt(-mantissa_), exponent_); }

    /// this * 2^k
    Dyadic shifted(std::int64_t k) const {
        if (is_zero()) return *this;
        Dyadic out = *this;
        out.exponent_ += k;
        return out;
    }

    friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a.exponent_ <= b.exponent_) {
            BigInt m = b.mantissa_;
            m <<= static_cast<std::size_t>(b.exponent_ - a.exponent_);
            return Dyadic(a.mantissa_ + m, a.exponent_);
        }
        return b + a;
    }
    friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
    friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
        return Dyadic(a.mantissa_ * b.mantissa_, a.exponent_ + b.exponent_);
    }
    Dyadic& operator+=(const Dyadic& other) { return *this = *this + other; }

    friend bool operator==(const Dyadic& a, const Dyadic& b) {
        return a.exponent_ == b.exponent_ && a.mantissa_ == b.mantissa_;
    }

    friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
        const int sa = a.sign();
        const int sb = b.sign();
        if (sa != sb) return sa <=> sb;
        if (sa == 0) return std::strong_ordering::equal;
        // Same sign: compare magnitudes by top-bit position first.
        const auto ta = static_cast<std::int64_t>(bit_length(a.mantissa_)) + a.exponent_;
        const auto tb = static_cast<std::int64_t>(bit_length(b.mantissa_)) + b.exponent_;
        std::strong_ordering mag = std::strong_ordering::equal;
        if (ta != tb) {
            mag = ta <=> tb;
        } else {
            const Dyadic diff = a.abs() - b.abs();
            mag = diff.sign() <=> 0;
        }
        if (sa > 0) return mag;
        return 0 <=> mag;
    }

    /// Smallest value >= *this whose mantissa fits in `bits` bits.
    Dyadic round_up(std::size_t bits) const {
        const std::size_t len = bit_length(mantissa_);
        if (len <= bits) return *this;
        const std::size_t drop = len - bits;
        BigInt m = floor_shift(mantissa_, drop);
        if ((m << drop) != mantissa_) m += 1;
        return Dyadic(std::move(m), exponent_ + static_cast<std::int64_t>(drop));
    }

    /// Nearest double (ties to even).
    double to_double() const {
        if (is_zero()) return 0.0;
        const BigInt mag = boost::multiprecision::abs(mantissa_);
        const std::size_t len = bit_length(mag);
        double out = 0.0;
        if (len <= 64) {
            out = std::ldexp(static_cast<double>(mag.convert_to<std::uint64_t>()),
                             static_cast<int>(clamp_exp(exponent_)));
        } else {
            const std::size_t shift = len - 64;
            BigInt top = mag >> shift;
            auto word = top.convert_to<std::uint64_t>();
            if ((top << shift) != mag) word |= 1U;  // sticky bit, far below the rounding point
            out = std::ldexp(static_cast<double>(word),
                             static_cast<int>(clamp_exp(exponent_ + static_cast<std::int64_t>(shift))));
        }
        return mantissa_ < 0 ? -out : out;
    }

    /// Largest double <= *this.
    double to_double_down() const {
        double d = to_double();
        if (std::isfinite(d) && Dyadic::from_double(d) > *this)
            d = std::nextafter(d, -std::numeric_limits<double>::infinity());
        return d;
    }

    /// Smallest double >= *this.
    double to_double_up() const {
        double d = to_double();
        if (std::isfinite(d) && Dyadic::from_double(d) < *this)
            d = std::nextafter(d, std::numeric_limits<double>::infinity());
        return d;
    }

    /// "m*2^e", or plain "m" when the exponent is zero.
    std::string to_string() const {
        if (exponent_ == 0) return mantissa_.str();
        return mantissa_.str() + "*2^" + std::to_string(exponent_);
    }

    /// Exact decimal expansion (always finite for a dyadic rational).
    std::string to_decimal() const {
        if (exponent_ >= 0) {
            BigInt m = mantissa_;
            m <<= static_cast<std::size_t>(exponent_);
            return m.str();
        }
        const auto k = static_cast<std::size_t>(-exponent_);
        BigInt digits_value = boost::multiprecision::abs(mantissa_);
        digits_value *= boost::multiprecision::pow(BigInt(5), static_cast<unsigned>(k));
        std::string digits = digits_value.str();
        if (digits.size() <= k) digits.insert(0, k - digits.size() + 1, '0');
        digits.insert(digits.size() - k, 1, '.');
        return (mantissa_ < 0 ? "-" : "") + digits;
    }

private:
    static std::int64_t clamp_exp(std::int64_t e) {
        constexpr std::int64_t lim = 1 << 20;
        return e > lim ? lim : (e < -lim ? -lim : e);
    }

    void canonicalize() {
        if (mantissa_ == 0) {
            exponent_ = 0;
            return;
        }
        const auto tz = boost::multiprecision::lsb(boost::multiprecision::abs(mantissa_));
        if (tz > 0) {
            mantissa_ = floor_shift(mantissa_, tz);
            exponent_ += static_cast<std::int64_t>(tz);
        }
    }

    BigInt mantissa_ = 0;
    std::int64_t exponent_ = 0;
};

}  // namespace hrfna

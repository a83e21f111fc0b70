#pragma once

// Reference arithmetic and baselines. Built on GMP rationals and MPFR only;
// nothing here includes or calls the hybrid number code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <mpfr.h>

#include "hrfna/errors.hpp"
#include "hrfna/ode.hpp"

namespace hrfna::oracle {

using Rational = mpq_class;

// ---------------------------------------------------------------------------
// Exact parsing and conversion
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline Rational pow_rational(long base, long e) {
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), static_cast<unsigned long>(base), static_cast<unsigned long>(e < 0 ? -e : e));
    Rational r = e < 0 ? Rational(mpz_class(1), p) : Rational(p);
    r.canonicalize();
    return r;
}

inline long parse_long(std::string_view s) {
    s = trim(s);
    if (s.empty()) throw ParseError(0, "missing exponent");
    std::size_t i = 0;
    bool neg = false;
    if (s[0] == '+' || s[0] == '-') {
        neg = s[0] == '-';
        i = 1;
    }
    if (i == s.size() || s.size() - i > 15) throw ParseError(0, "invalid exponent '" + std::string(s) + "'");
    long v = 0;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') throw ParseError(0, "invalid exponent '" + std::string(s) + "'");
        v = v * 10 + (s[i] - '0');
    }
    return neg ? -v : v;
}

inline Rational parse_decimal(std::string_view s) {
    s = trim(s);
    long exp10 = 0;
    if (const auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        exp10 = parse_long(s.substr(e + 1));
        s = s.substr(0, e);
    }
    std::string digits;
    bool neg = false;
    bool point = false;
    std::size_t i = 0;
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
        neg = s[0] == '-';
        i = 1;
    }
    for (; i < s.size(); ++i) {
        if (s[i] == '.' && !point) {
            point = true;
        } else if (s[i] >= '0' && s[i] <= '9') {
            digits.push_back(s[i]);
            if (point) --exp10;
        } else {
            throw ParseError(0, "invalid number '" + std::string(s) + "'");
        }
    }
    if (digits.empty()) throw ParseError(0, "invalid number '" + std::string(s) + "'");
    Rational r(mpz_class(digits, 10));
    if (neg) r = -r;
    r *= pow_rational(10, exp10);
    r.canonicalize();
    return r;
}

}  // namespace detail

/// Same textual forms as the library parser: "-0.375", "1e-3", "3*2^-7", "2^-7", "1/6".
inline Rational parse_rational(std::string_view text) {
    const std::string_view s = detail::trim(text);
    if (s.empty()) throw ParseError(0, "empty number");
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        const Rational d = detail::parse_decimal(s.substr(slash + 1));
        if (d == 0) throw ParseError(0, "zero denominator");
        Rational r = detail::parse_decimal(s.substr(0, slash)) / d;
        r.canonicalize();
        return r;
    }
    if (const auto star = s.find("*2^"); star != std::string_view::npos)
        return detail::parse_decimal(s.substr(0, star)) * detail::pow_rational(2, detail::parse_long(s.substr(star + 3)));
    if (s.starts_with("2^")) return detail::pow_rational(2, detail::parse_long(s.substr(2)));
    return detail::parse_decimal(s);
}

inline Rational to_rational(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite input");
    return Rational(v);
}

inline std::vector<Rational> to_rationals(std::span<const double> xs) {
    std::vector<Rational> out;
    out.reserve(xs.size());
    for (const double v : xs) out.push_back(to_rational(v));
    return out;
}

/// Nearest double to an exact rational (ties to even), via MPFR.
inline double to_double(const Rational& q) {
    mpfr_t t;
    mpfr_init2(t, 53);
    mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDN);
    const double d = mpfr_get_d(t, MPFR_RNDN);
    mpfr_clear(t);
    return d;
}

// ---------------------------------------------------------------------------
// Exact kernels
// ---------------------------------------------------------------------------

inline Rational exact_dot(std::span<const Rational> x, std::span<const Rational> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "exact_dot operands differ in length");
    if (x.empty()) throw Error(ErrorCode::EmptyInput, "exact_dot needs at least one element");
    Rational acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

inline Rational exact_dot(std::span<const double> x, std::span<const double> y) {
    const auto qx = to_rationals(x);
    const auto qy = to_rationals(y);
    return exact_dot(std::span<const Rational>(qx), std::span<const Rational>(qy));
}

/// Row-major (n x k) * (k x m).
inline std::vector<Rational> exact_matmul(std::span<const double> a, std::size_t n, std::size_t k,
                                          std::span<const double> b, std::size_t k2, std::size_t m) {
    if (k != k2 || a.size() != n * k || b.size() != k2 * m)
        throw Error(ErrorCode::DimensionMismatch, "exact_matmul shape mismatch");
    const auto qa = to_rationals(a);
    const auto qb = to_rationals(b);
    std::vector<Rational> c(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            Rational acc = 0;
            for (std::size_t t = 0; t < k; ++t) acc += qa[i * k + t] * qb[t * m + j];
            c[i * m + j] = std::move(acc);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// High-precision RK4
// ---------------------------------------------------------------------------

/// RAII MPFR value at a fixed precision.
class Real {
public:
    explicit Real(mpfr_prec_t prec) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
    Real(const Real& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
    Real& operator=(const Real& o) {
        if (this != &o) mpfr_set(v_, o.v_, MPFR_RNDN);
        return *this;
    }
    ~Real() { mpfr_clear(v_); }

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }

    void set(const Rational& q) { mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN); }

    /// The exact value of this binary float.
    Rational to_rational() const {
        if (mpfr_zero_p(v_)) return Rational(0);
        mpz_class m;
        const mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), v_);
        Rational r(m);
        if (e >= 0) {
            mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
        } else {
            mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
        }
        return r;
    }

private:
    mpfr_t v_;
};

struct ReferenceCheckpoint {
    std::uint64_t step = 0;
    Rational value;
};

/// Classical RK4 evaluated with MPFR at `precision_bits`, sampled at the
/// same steps as the hybrid integrator (every checkpoint_every and the last).
inline std::vector<ReferenceCheckpoint> highprec_rk4(const OdeProblem& prob, unsigned precision_bits) {
    if (prob.steps == 0 || prob.checkpoint_every == 0)
        throw Error(ErrorCode::InvalidArgument, "steps and checkpoint_every must be positive");
    const auto prec = static_cast<mpfr_prec_t>(precision_bits);
    const Rational hq = parse_rational(prob.h);
    Real h(prec), half_h(prec), sixth(prec), lambda(prec), y(prec);
    h.set(hq);
    half_h.set(hq / 2);
    mpfr_set_ui(sixth.get(), 1, MPFR_RNDN);
    mpfr_div_ui(sixth.get(), sixth.get(), 6, MPFR_RNDN);
    lambda.set(parse_rational(prob.lambda));
    y.set(parse_rational(prob.y0));

    Real k1(prec), k2(prec), k3(prec), k4(prec), t(prec), u(prec), sum(prec);
    auto rhs = [&](Real& out, const Real& at) {
        switch (prob.rhs) {
            case RhsKind::Zero: mpfr_set_zero(out.get(), 1); return;
            case RhsKind::LinearDecay:
                mpfr_mul(out.get(), lambda.get(), at.get(), MPFR_RNDN);
                mpfr_neg(out.get(), out.get(), MPFR_RNDN);
                return;
            case RhsKind::Logistic:
                mpfr_ui_sub(u.get(), 1, at.get(), MPFR_RNDN);
                mpfr_mul(out.get(), at.get(), u.get(), MPFR_RNDN);
                return;
            case RhsKind::CubicDamping:
                mpfr_mul(u.get(), at.get(), at.get(), MPFR_RNDN);
                mpfr_mul(u.get(), u.get(), at.get(), MPFR_RNDN);
                mpfr_sub(out.get(), at.get(), u.get(), MPFR_RNDN);
                return;
        }
        throw Error(ErrorCode::UnsupportedRhs, "unsupported right-hand side");
    };
    auto stage = [&](Real& out, const Real& coef, const Real& k) {
        mpfr_mul(t.get(), coef.get(), k.get(), MPFR_RNDN);
        mpfr_add(t.get(), y.get(), t.get(), MPFR_RNDN);
        rhs(out, t);
    };

    std::vector<ReferenceCheckpoint> out;
    for (std::uint64_t n = 1; n <= prob.steps; ++n) {
        rhs(k1, y);
        stage(k2, half_h, k1);
        stage(k3, half_h, k2);
        stage(k4, h, k3);
        mpfr_add(sum.get(), k2.get(), k3.get(), MPFR_RNDN);
        mpfr_mul_2ui(sum.get(), sum.get(), 1, MPFR_RNDN);
        mpfr_add(sum.get(), sum.get(), k1.get(), MPFR_RNDN);
        mpfr_add(sum.get(), sum.get(), k4.get(), MPFR_RNDN);
        mpfr_mul(sum.get(), sum.get(), h.get(), MPFR_RNDN);
        mpfr_mul(sum.get(), sum.get(), sixth.get(), MPFR_RNDN);
        mpfr_add(y.get(), y.get(), sum.get(), MPFR_RNDN);
        if (n % prob.checkpoint_every == 0 || n == prob.steps) out.push_back({n, y.to_rational()});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Floating-point baselines
// ---------------------------------------------------------------------------

/// Sequential binary32 dot product with a fused multiply-add per step.
inline float binary32_dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "binary32_dot operands differ in length");
    float acc = 0.0F;
    for (std::size_t i = 0; i < x.size(); ++i)
        acc = std::fmaf(static_cast<float>(x[i]), static_cast<float>(y[i]), acc);
    return acc;
}

inline double binary64_dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "binary64_dot operands differ in length");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc = std::fma(x[i], y[i], acc);
    return acc;
}

template <typename Dot>
std::vector<double> matmul_by(std::span<const double> a, std::size_t n, std::size_t k, std::span<const double> b,
                              std::size_t k2, std::size_t m, Dot dot) {
    if (k != k2 || a.size() != n * k || b.size() != k2 * m)
        throw Error(ErrorCode::DimensionMismatch, "matmul shape mismatch");
    std::vector<double> c(n * m);
    std::vector<double> col(k);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t t = 0; t < k; ++t) col[t] = b[t * m + j];
        for (std::size_t i = 0; i < n; ++i) c[i * m + j] = dot(a.subspan(i * k, k), std::span<const double>(col));
    }
    return c;
}

inline std::vector<double> binary32_matmul(std::span<const double> a, std::size_t n, std::size_t k,
                                           std::span<const double> b, std::size_t k2, std::size_t m) {
    return matmul_by(a, n, k, b, k2, m, [](auto x, auto y) { return static_cast<double>(binary32_dot(x, y)); });
}

inline std::vector<double> binary64_matmul(std::span<const double> a, std::size_t n, std::size_t k,
                                           std::span<const double> b, std::size_t k2, std::size_t m) {
    return matmul_by(a, n, k, b, k2, m, [](auto x, auto y) { return binary64_dot(x, y); });
}

/// RK4 in a native floating type, sampled like highprec_rk4. The 1/6
/// coefficient and the parameters are rounded to T once.
template <typename T>
std::vector<double> float_rk4(const OdeProblem& prob) {
    const T h = static_cast<T>(to_double(parse_rational(prob.h)));
    const T half_h = h / T(2);
    const T sixth = T(1) / T(6);
    const T lambda = static_cast<T>(to_double(parse_rational(prob.lambda)));
    T y = static_cast<T>(to_double(parse_rational(prob.y0)));
    auto rhs = [&](T v) -> T {
        switch (prob.rhs) {
            case RhsKind::Zero: return T(0);
            case RhsKind::LinearDecay: return -lambda * v;
            case RhsKind::Logistic: return v * (T(1) - v);
            case RhsKind::CubicDamping: return v - v * v * v;
        }
        return T(0);
    };
    std::vector<double> out;
    for (std::uint64_t n = 1; n <= prob.steps; ++n) {
        const T k1 = rhs(y);
        const T k2 = rhs(y + half_h * k1);
        const T k3 = rhs(y + half_h * k2);
        const T k4 = rhs(y + h * k3);
        y = y + h * sixth * (k1 + T(2) * k2 + T(2) * k3 + k4);
        if (n % prob.checkpoint_every == 0 || n == prob.steps) out.push_back(static_cast<double>(y));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Block floating point
// ---------------------------------------------------------------------------

/// Each block of `block_size` elements shares the exponent of its largest
/// element; elements keep `mantissa_bits` signed bits (round to nearest).
/// Block products are summed exactly and folded into an accumulator that
/// keeps `accumulator_bits` bits, truncating toward minus infinity.
struct BfpConfig {
    std::size_t block_size = 16;
    unsigned mantissa_bits = 24;
    unsigned accumulator_bits = 24;

    void validate() const {
        if (block_size < 1 || block_size > (std::size_t{1} << 20))
            throw Error(ErrorCode::InvalidArgument, "bfp block_size must be in [1, 2^20]");
        if (mantissa_bits < 2 || mantissa_bits > 53)
            throw Error(ErrorCode::InvalidArgument, "bfp mantissa_bits must be in [2, 53]");
        if (accumulator_bits < 2) throw Error(ErrorCode::InvalidArgument, "bfp accumulator_bits must be at least 2");
    }
};

struct BfpBlock {
    int shared_exponent = 0;           // value = q * 2^(shared_exponent - mantissa_bits + 1)
    std::vector<std::int64_t> q;
};

inline BfpBlock bfp_quantize(std::span<const double> xs, unsigned mantissa_bits) {
    BfpBlock blk;
    blk.q.assign(xs.size(), 0);
    int emax = std::numeric_limits<int>::min();
    for (const double v : xs) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite input");
        if (v != 0.0) {
            int e = 0;
            std::frexp(v, &e);
            emax = std::max(emax, e);
        }
    }
    if (emax == std::numeric_limits<int>::min()) return blk;
    blk.shared_exponent = emax;
    const int scale = static_cast<int>(mantissa_bits) - 1 - emax;
    for (std::size_t i = 0; i < xs.size(); ++i)
        blk.q[i] = static_cast<std::int64_t>(std::nearbyint(std::ldexp(xs[i], scale)));
    return blk;
}

/// Exact value of a quantized block element.
inline Rational bfp_value(const BfpBlock& blk, std::size_t i, unsigned mantissa_bits) {
    Rational r(mpz_class(static_cast<long>(blk.q[i])));
    const long e = static_cast<long>(blk.shared_exponent) - static_cast<long>(mantissa_bits) + 1;
    if (e >= 0) {
        mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    } else {
        mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
    }
    return r;
}

/// Fixed-width accumulator: value = mant * 2^exp.
class BfpAccumulator {
public:
    explicit BfpAccumulator(unsigned bits) : bits_(bits) {}

    void add(const mpz_class& m, long e) {
        if (m == 0) return;
        if (mant_ == 0) {
            mant_ = m;
            exp_ = e;
        } else if (e >= exp_) {
            mpz_class shifted = m;
            mpz_mul_2exp(shifted.get_mpz_t(), shifted.get_mpz_t(), static_cast<mp_bitcnt_t>(e - exp_));
            mant_ += shifted;
        } else {
            mpz_mul_2exp(mant_.get_mpz_t(), mant_.get_mpz_t(), static_cast<mp_bitcnt_t>(exp_ - e));
            mant_ += m;
            exp_ = e;
        }
        const std::size_t len = mpz_sizeinbase(mant_.get_mpz_t(), 2);
        if (mant_ != 0 && len > bits_) {
            const auto drop = static_cast<mp_bitcnt_t>(len - bits_);
            mpz_fdiv_q_2exp(mant_.get_mpz_t(), mant_.get_mpz_t(), drop);
            exp_ += static_cast<long>(drop);
        }
    }

    Rational value() const {
        Rational r(mant_);
        if (exp_ >= 0) {
            mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(exp_));
        } else {
            mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(-exp_));
        }
        return r;
    }

private:
    unsigned bits_;
    mpz_class mant_ = 0;
    long exp_ = 0;
};

inline Rational bfp_dot(std::span<const double> x, std::span<const double> y, const BfpConfig& cfg = {}) {
    cfg.validate();
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "bfp_dot operands differ in length");
    BfpAccumulator acc(cfg.accumulator_bits);
    for (std::size_t start = 0; start < x.size(); start += cfg.block_size) {
        const std::size_t len = std::min(cfg.block_size, x.size() - start);
        const BfpBlock bx = bfp_quantize(x.subspan(start, len), cfg.mantissa_bits);
        const BfpBlock by = bfp_quantize(y.subspan(start, len), cfg.mantissa_bits);
        mpz_class m = 0;
        mpz_class t;
        for (std::size_t i = 0; i < len; ++i) {
            mpz_set_si(t.get_mpz_t(), static_cast<long>(bx.q[i]));
            mpz_mul_si(t.get_mpz_t(), t.get_mpz_t(), static_cast<long>(by.q[i]));
            m += t;
        }
        const long e = static_cast<long>(bx.shared_exponent) + by.shared_exponent - 2L * (cfg.mantissa_bits - 1);
        acc.add(m, e);
    }
    return acc.value();
}

inline std::vector<Rational> bfp_matmul(std::span<const double> a, std::size_t n, std::size_t k,
                                        std::span<const double> b, std::size_t k2, std::size_t m,
                                        const BfpConfig& cfg = {}) {
    if (k != k2 || a.size() != n * k || b.size() != k2 * m)
        throw Error(ErrorCode::DimensionMismatch, "bfp_matmul shape mismatch");
    std::vector<Rational> c(n * m);
    std::vector<double> col(k);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t t = 0; t < k; ++t) col[t] = b[t * m + j];
        for (std::size_t i = 0; i < n; ++i) c[i * m + j] = bfp_dot(a.subspan(i * k, k), std::span<const double>(col), cfg);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// rms and max_abs are absolute; rel_rms = rms / RMS(exact); max_rel skips
/// exact zeros unless the approximation differs there (then +inf).
struct ErrorMetrics {
    double rms = 0.0;
    double max_abs = 0.0;
    double max_rel = 0.0;
    double rel_rms = 0.0;
    std::size_t n = 0;
};

namespace detail {

inline double sqrt_ratio(const Rational& num, const Rational& den) {
    if (num == 0) return 0.0;
    if (den == 0) return std::numeric_limits<double>::infinity();
    mpfr_t t;
    mpfr_init2(t, 128);
    const Rational q = num / den;
    mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDN);
    mpfr_sqrt(t, t, MPFR_RNDN);
    const double d = mpfr_get_d(t, MPFR_RNDN);
    mpfr_clear(t);
    return d;
}

}  // namespace detail

inline ErrorMetrics rms_error(std::span<const Rational> approx, std::span<const Rational> exact) {
    if (approx.size() != exact.size()) throw Error(ErrorCode::LengthMismatch, "rms_error inputs differ in length");
    if (approx.empty()) throw Error(ErrorCode::EmptyInput, "rms_error needs at least one sample");
    ErrorMetrics m;
    m.n = approx.size();
    Rational sum_sq = 0;
    Rational exact_sq = 0;
    Rational max_abs = 0;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < approx.size(); ++i) {
        Rational d = approx[i] - exact[i];
        const Rational ad = abs(d);
        sum_sq += d * d;
        exact_sq += exact[i] * exact[i];
        if (ad > max_abs) max_abs = ad;
        if (exact[i] != 0) {
            max_rel = std::max(max_rel, to_double(Rational(ad / abs(exact[i]))));
        } else if (ad != 0) {
            max_rel = std::numeric_limits<double>::infinity();
        }
    }
    m.rms = detail::sqrt_ratio(sum_sq, Rational(static_cast<long>(m.n)));
    m.max_abs = to_double(max_abs);
    m.max_rel = max_rel;
    m.rel_rms = detail::sqrt_ratio(sum_sq, exact_sq);
    return m;
}

inline ErrorMetrics rms_error(std::span<const double> approx, std::span<const Rational> exact) {
    const auto q = to_rationals(approx);
    return rms_error(std::span<const Rational>(q), exact);
}

}  // namespace hrfna::oracle

#pragma once

// Hybrid residue/exponent numbers: value CRT(r) * 2^f, with a conservative
// integer bound B >= |CRT(r)| carried alongside so that wrap-around at M is
// ruled out without reconstructing.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hrfna/budget.hpp"
#include "hrfna/core.hpp"
#include "hrfna/dyadic.hpp"
#include "hrfna/number_text.hpp"

namespace hrfna {

/// Threshold, post-normalization magnitude budget and rounding rule.
struct NormalizationPolicy {
    BigInt tau;
    unsigned target_bits = 0;  // beta
    RoundingMode mode = RoundingMode::NearestEven;
    std::uint64_t check_every = 1024;
    std::optional<unsigned> fixed_shift;  // when set, every event shifts by exactly this amount

    /// tau = floor(M/4), beta = floor((bitlen(M) - 2) / 2).
    static NormalizationPolicy defaults(const ModulusSet& ms) {
        NormalizationPolicy p;
        p.tau = ms.composite() / 4;
        const std::size_t bits = bit_length(ms.composite());
        p.target_bits = bits >= 2 ? static_cast<unsigned>((bits - 2) / 2) : 0U;
        return p;
    }

    void validate(const ModulusSet& ms) const {
        if (tau <= 0) throw Error(ErrorCode::InvalidPolicy, "tau must be positive");
        if (!ms.within_half(tau)) throw Error(ErrorCode::InvalidPolicy, "tau must be below M/2");
        if (pow2(target_bits) >= tau) throw Error(ErrorCode::InvalidPolicy, "2^target_bits must be below tau");
        if (check_every == 0) throw Error(ErrorCode::InvalidPolicy, "check_every must be positive");
        if (fixed_shift && *fixed_shift == 0) throw Error(ErrorCode::InvalidPolicy, "fixed_shift must be positive");
    }
};

class HybridNumber {
public:
    HybridNumber(ResidueVector residues, std::int64_t exponent, BigInt bound)
        : residues_(std::move(residues)), exponent_(exponent), bound_(std::move(bound)) {
        if (bound_ < 0) throw Error(ErrorCode::InvalidArgument, "negative magnitude bound");
        if (!residues_.set().within_half(bound_))
            throw Error(ErrorCode::WouldWrap, "magnitude bound is not below M/2");
    }

    static HybridNumber zero(const ModulusSetPtr& ms, std::int64_t exponent = 0) {
        return HybridNumber(ResidueVector::zero(ms), exponent, BigInt(0));
    }

    const ResidueVector& residues() const noexcept { return residues_; }
    std::int64_t exponent() const noexcept { return exponent_; }
    const BigInt& bound() const noexcept { return bound_; }
    const ModulusSet& set() const noexcept { return residues_.set(); }
    const ModulusSetPtr& set_ptr() const noexcept { return residues_.set_ptr(); }

    /// B * 2^f, an upper bound on |phi|.
    Dyadic magnitude_bound() const { return Dyadic(bound_, exponent_); }

    friend bool operator==(const HybridNumber&, const HybridNumber&) = default;

private:
    ResidueVector residues_;
    std::int64_t exponent_;
    BigInt bound_;
};

/// Sound bounds lo <= |CRT(r)| <= hi, tagged with the index it was computed for.
struct MagnitudeInterval {
    BigInt lo;
    BigInt hi;
    std::size_t idx = 0;
};

/// Exact value CRT(r) * 2^f.
inline Dyadic phi(const HybridNumber& x) {
    return Dyadic(crt_reconstruct(x.residues()), x.exponent());
}

// ---------------------------------------------------------------------------
// Conversion
// ---------------------------------------------------------------------------

/// Rounds v to nearest (ties to even) with an integer mantissa N in
/// [2^(bits-1), 2^bits); exact whenever v is dyadic with at most `bits`
/// significant bits.
inline HybridNumber from_rational(const Ratio& v, const ModulusSetPtr& ms, unsigned mantissa_bits) {
    if (mantissa_bits == 0) throw Error(ErrorCode::InvalidArgument, "mantissa_bits must be positive");
    if (v.num == 0) return HybridNumber::zero(ms);
    const BigInt a = boost::multiprecision::abs(v.num);
    const BigInt& b = v.den;
    const auto d = static_cast<std::int64_t>(bit_length(a)) - static_cast<std::int64_t>(bit_length(b));
    const bool at_least = d >= 0 ? a >= (b << static_cast<std::size_t>(d))
                                 : (a << static_cast<std::size_t>(-d)) >= b;
    const std::int64_t floor_log2 = at_least ? d : d - 1;
    std::int64_t f = floor_log2 - static_cast<std::int64_t>(mantissa_bits) + 1;

    BigInt num = f <= 0 ? BigInt(a << static_cast<std::size_t>(-f)) : a;
    BigInt den = f > 0 ? BigInt(b << static_cast<std::size_t>(f)) : b;
    BigInt q = num / den;
    const BigInt twice_rem = (num - q * den) * 2;
    if (twice_rem > den || (twice_rem == den && (q & 1) != 0)) q += 1;
    if (q == pow2(mantissa_bits)) {
        q >>= 1;
        f += 1;
    }
    const BigInt n = v.num < 0 ? BigInt(-q) : q;
    return HybridNumber(encode(n, ms), f, q);
}

inline HybridNumber from_dyadic(const Dyadic& v, const ModulusSetPtr& ms, unsigned mantissa_bits) {
    return from_rational(Ratio::of(v), ms, mantissa_bits);
}

inline HybridNumber from_real(double v, const ModulusSetPtr& ms, unsigned mantissa_bits) {
    return from_dyadic(Dyadic::from_double(v), ms, mantissa_bits);
}

inline HybridNumber negate(const HybridNumber& x) {
    return HybridNumber(mod_neg(x.residues()), x.exponent(), x.bound());
}

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

inline bool needs_normalization(const HybridNumber& x, const NormalizationPolicy& policy) {
    return x.bound() >= policy.tau;
}

/// Residue product and exponent sum; exact, no rounding.
inline HybridNumber hybrid_mul(const HybridNumber& x, const HybridNumber& y, Ledger& ledger) {
    require_same_binding(x.set(), y.set());
    BigInt bound = x.bound() * y.bound();
    if (!x.set().within_half(bound))
        throw Error(ErrorCode::WouldWrap, "product bound reaches M/2; normalize an operand first");
    ledger.counters.record(EventKind::Mul);
    if (bound == 0) return HybridNumber::zero(x.set_ptr());
    return HybridNumber(mod_mul(x.residues(), y.residues()), x.exponent() + y.exponent(), std::move(bound));
}

namespace detail {

// 2^(e-1) for nearest-even, 2^e for floor: the worst error of one rescale
// whose result lands on exponent e.
inline Dyadic rounding_unit(std::int64_t e, RoundingMode mode) {
    return Dyadic::pow2(mode == RoundingMode::NearestEven ? e - 1 : e);
}

// Exclusive limit on a bound that keeps |N| < M/2.
inline BigInt half_limit(const ModulusSet& ms) { return (ms.composite() + 1) / 2; }

inline HybridNumber scale_up(const HybridNumber& x, std::uint64_t k) {
    if (k == 0) return x;
    return HybridNumber(mod_scale_pow2(x.residues(), k), x.exponent() - static_cast<std::int64_t>(k),
                        x.bound() << static_cast<std::size_t>(k));
}

inline HybridNumber scale_down(const HybridNumber& x, std::uint64_t k, RoundingMode mode, Ledger& ledger) {
    const BigInt n = crt_reconstruct(x.residues());
    ledger.counters.record(EventKind::Reconstruction);
    const BigInt q = round_shift(n, static_cast<std::size_t>(k), mode);
    const std::int64_t f = x.exponent() + static_cast<std::int64_t>(k);
    if (q == 0) return HybridNumber::zero(x.set_ptr(), f);
    return HybridNumber(encode(q, x.set_ptr()), f, boost::multiprecision::abs(q));
}

/// Brings x and y to one exponent. The larger-exponent operand is shifted up
/// exactly when the pair still sums below `limit`; otherwise it is shifted up
/// as far as that allows and the other operand is rounded down the rest of
/// the way (a charged, lossy event).
inline std::pair<HybridNumber, HybridNumber> sync(const HybridNumber& x, const HybridNumber& y,
                                                  const NormalizationPolicy& policy, const BigInt& limit,
                                                  Ledger& ledger) {
    require_same_binding(x.set(), y.set());
    if (x.exponent() == y.exponent()) return {x, y};
    if (x.bound() == 0) {
        ledger.counters.record(EventKind::SyncExact);
        return {HybridNumber::zero(x.set_ptr(), y.exponent()), y};
    }
    if (y.bound() == 0) {
        ledger.counters.record(EventKind::SyncExact);
        return {x, HybridNumber::zero(y.set_ptr(), x.exponent())};
    }
    const bool x_high = x.exponent() > y.exponent();
    const HybridNumber& hi = x_high ? x : y;
    const HybridNumber& lo = x_high ? y : x;
    const auto delta = static_cast<std::uint64_t>(hi.exponent() - lo.exponent());
    const std::size_t limit_bits = bit_length(limit);

    auto fits = [&](std::uint64_t up) {
        const BigInt lo_part = ceil_shift(lo.bound(), static_cast<std::size_t>(delta - up));
        return (hi.bound() << static_cast<std::size_t>(up)) + lo_part < limit;
    };

    if (delta <= limit_bits && (hi.bound() << static_cast<std::size_t>(delta)) + lo.bound() < limit) {
        ledger.counters.record(EventKind::SyncExact);
        HybridNumber up = scale_up(hi, delta);
        return x_high ? std::pair{std::move(up), lo} : std::pair{lo, std::move(up)};
    }

    const std::size_t hi_bits = bit_length(hi.bound());
    std::uint64_t up = limit_bits >= hi_bits + 1 ? limit_bits - hi_bits - 1 : 0;
    up = std::min<std::uint64_t>(up, delta - 1);
    while (up > 0 && !fits(up)) --up;

    const std::uint64_t down = delta - up;
    HybridNumber hi_synced = scale_up(hi, up);
    HybridNumber lo_synced = scale_down(lo, down, policy.mode, ledger);
    ledger.counters.record(EventKind::SyncLossy);
    ledger.budget.charge(BudgetEvent{ledger.op_index(), BudgetEventKind::LossySync, down, lo.exponent(),
                                     rounding_unit(hi_synced.exponent(), policy.mode)});
    return x_high ? std::pair{std::move(hi_synced), std::move(lo_synced)}
                  : std::pair{std::move(lo_synced), std::move(hi_synced)};
}

inline HybridNumber add_synced(const HybridNumber& a, const HybridNumber& b, Ledger& ledger) {
    BigInt bound = a.bound() + b.bound();
    if (!a.set().within_half(bound))
        throw Error(ErrorCode::WouldWrap, "sum bound reaches M/2; normalize before adding");
    ledger.counters.record(EventKind::Add);
    if (bound == 0) return HybridNumber::zero(a.set_ptr());
    return HybridNumber(mod_add(a.residues(), b.residues()), a.exponent(), std::move(bound));
}

struct NormalizeStep {
    HybridNumber value;
    std::uint64_t shift = 0;
};

// One normalization event; the charge is the rounding unit times `scale`
// (scale > 1 when the normalized value is later multiplied by something of
// magnitude up to `scale`).
inline NormalizeStep normalize_once(const HybridNumber& x, const NormalizationPolicy& policy, Ledger& ledger,
                                    const Dyadic& scale) {
    const std::size_t bits = bit_length(x.bound());
    std::uint64_t s = 0;
    if (bits > policy.target_bits) s = policy.fixed_shift ? *policy.fixed_shift : bits - policy.target_bits;
    if (s == 0) return {x, 0};

    const BigInt n = crt_reconstruct(x.residues());
    ledger.counters.record(EventKind::Reconstruction);
    ledger.counters.record(EventKind::Normalization);
    if (boost::multiprecision::abs(n) >= policy.tau) ++ledger.counters.normalizations_above_tau;

    const BigInt q = round_shift(n, static_cast<std::size_t>(s), policy.mode);
    const std::int64_t f = x.exponent() + static_cast<std::int64_t>(s);
    ledger.budget.charge(BudgetEvent{ledger.op_index(), BudgetEventKind::Normalization, s, x.exponent(),
                                     rounding_unit(f, policy.mode) * scale});
    if (q == 0) return {HybridNumber::zero(x.set_ptr()), s};
    return {HybridNumber(encode(q, x.set_ptr()), f, boost::multiprecision::abs(q)), s};
}

inline HybridNumber normalize_scaled(const HybridNumber& x, const NormalizationPolicy& policy, Ledger& ledger,
                                     const Dyadic& scale) {
    NormalizeStep step = normalize_once(x, policy, ledger, scale);
    // A fixed shift may need several events to get back under tau.
    while (policy.fixed_shift && step.shift != 0 && needs_normalization(step.value, policy))
        step = normalize_once(step.value, policy, ledger, scale);
    return std::move(step.value);
}

}  // namespace detail

/// Shares one exponent between x and y (see detail::sync); the pair is kept
/// addable, i.e. its bounds sum below M/2 whenever that is achievable.
inline std::pair<HybridNumber, HybridNumber> exponent_sync(const HybridNumber& x, const HybridNumber& y,
                                                           const NormalizationPolicy& policy, Ledger& ledger) {
    return detail::sync(x, y, policy, detail::half_limit(x.set()), ledger);
}

inline HybridNumber hybrid_add(const HybridNumber& x, const HybridNumber& y, const NormalizationPolicy& policy,
                               Ledger& ledger) {
    auto [a, b] = exponent_sync(x, y, policy, ledger);
    return detail::add_synced(a, b, ledger);
}

/// Rescales by 2^s with s = bitlen(B) - beta (or the policy's fixed shift),
/// re-encodes, and charges 2^(f+s-1) (nearest-even) or 2^(f+s) (floor).
/// A no-op when B < 2^beta. The returned bound is the exact |N~|.
inline HybridNumber normalize(const HybridNumber& x, const NormalizationPolicy& policy, Ledger& ledger) {
    return detail::normalize_scaled(x, policy, ledger, Dyadic(BigInt(1)));
}

/// x*y, first shrinking operands until the product cannot wrap and then
/// normalizing the product if its bound reaches tau. Operand rounding is
/// charged scaled by the other operand's magnitude bound.
inline HybridNumber mul_normalized(const HybridNumber& x, const HybridNumber& y, const NormalizationPolicy& policy,
                                   Ledger& ledger) {
    require_same_binding(x.set(), y.set());
    const ModulusSet& ms = x.set();
    HybridNumber a = x;
    HybridNumber b = y;
    while (!ms.within_half(a.bound() * b.bound())) {
        const bool first = a.bound() >= b.bound();
        HybridNumber& target = first ? a : b;
        const HybridNumber& other = first ? b : a;
        auto step = detail::normalize_once(target, policy, ledger, other.magnitude_bound());
        if (step.shift == 0) throw Error(ErrorCode::WouldWrap, "operands cannot be normalized into range");
        target = std::move(step.value);
    }
    HybridNumber product = hybrid_mul(a, b, ledger);
    if (needs_normalization(product, policy)) product = normalize(product, policy, ledger);
    return product;
}

/// x + y with both operands and the result kept below tau.
inline HybridNumber add_normalized(const HybridNumber& x, const HybridNumber& y, const NormalizationPolicy& policy,
                                   Ledger& ledger) {
    const HybridNumber a = needs_normalization(x, policy) ? normalize(x, policy, ledger) : x;
    const HybridNumber b = needs_normalization(y, policy) ? normalize(y, policy, ledger) : y;
    auto [lhs, rhs] = detail::sync(a, b, policy, policy.tau, ledger);
    HybridNumber sum = detail::add_synced(lhs, rhs, ledger);
    if (needs_normalization(sum, policy)) sum = normalize(sum, policy, ledger);
    return sum;
}

/// acc + x*y with one synchronization; normalization only when a tracker
/// bound reaches tau.
inline HybridNumber mac(const HybridNumber& acc, const HybridNumber& x, const HybridNumber& y,
                        const NormalizationPolicy& policy, Ledger& ledger) {
    require_same_binding(acc.set(), x.set());
    HybridNumber sum = add_normalized(acc, mul_normalized(x, y, policy, ledger), policy, ledger);
    ledger.counters.record(EventKind::Mac);
    return sum;
}

// ---------------------------------------------------------------------------
// Magnitude estimation
// ---------------------------------------------------------------------------

/// Fractional-CRT interval on |N| without full reconstruction, or nullopt
/// when the estimate is too close to the sign fold (1/2) or to the wrap
/// point (1) to decide the sign.
///
/// With t_i = r_i * w_i mod m_i, N/M = sum t_i/m_i mod 1; each term is
/// truncated to p bits, so the truth lies in [F, F + k) * 2^-p.
inline std::optional<MagnitudeInterval> try_magnitude_interval(const HybridNumber& x, Ledger* ledger = nullptr) {
    const ModulusSet& ms = x.set();
    if (ledger) ledger->counters.record(EventKind::IntervalEval);
    const unsigned p = ms.frac_precision();
    const auto weights = ms.crt_weights();
    const auto mods = ms.moduli();
    BigInt fsum = 0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const std::uint64_t t = static_cast<std::uint64_t>(x.residues()[i]) * weights[i].inverse % mods[i];
        if (t != 0) fsum += (BigInt(t) << p) / mods[i];
    }
    const BigInt one = pow2(p);
    const BigInt half = pow2(p - 1);
    const BigInt f = fsum % one;
    const BigInt f_top = f + ms.size();
    const BigInt& m = ms.composite();

    if (f_top <= half) {
        BigInt lo = f * m;
        BigInt lo_q = lo >> p;
        if ((lo_q << p) != lo) lo_q += 1;
        return MagnitudeInterval{std::move(lo_q), BigInt((f_top * m) >> p), 0};
    }
    if (f > half && f_top <= one) {
        return MagnitudeInterval{BigInt(((one - f_top) * m) >> p), BigInt(((one - f) * m) >> p), 0};
    }
    return std::nullopt;
}

inline MagnitudeInterval magnitude_interval(const HybridNumber& x, Ledger* ledger = nullptr) {
    auto iv = try_magnitude_interval(x, ledger);
    if (!iv) throw Error(ErrorCode::AmbiguousSign, "estimate too close to the sign fold; reconstruct exactly");
    return *std::move(iv);
}

/// Tightens the tracker bound using the interval estimate (or an exact
/// reconstruction when the estimate is ambiguous). Never loosens it.
inline HybridNumber audit(const HybridNumber& x, Ledger& ledger) {
    BigInt tight;
    if (auto iv = try_magnitude_interval(x, &ledger)) {
        tight = std::move(iv->hi);
    } else {
        ledger.counters.record(EventKind::Reconstruction);
        tight = boost::multiprecision::abs(crt_reconstruct(x.residues()));
    }
    if (tight >= x.bound()) return x;
    return HybridNumber(x.residues(), x.exponent(), std::move(tight));
}

struct MaxSelection {
    std::size_t index = 0;
    MagnitudeInterval interval;
    std::uint64_t reconstructions = 0;
};

/// Index of a value with the largest |phi|, by a pairwise tournament over
/// interval estimates scaled by 2^f. Only candidates whose intervals overlap
/// (or whose sign is ambiguous) are reconstructed. Ties go to the lower index.
inline MaxSelection select_max_magnitude(std::span<const HybridNumber> xs, Ledger& ledger) {
    if (xs.empty()) throw Error(ErrorCode::EmptyInput, "select_max_magnitude needs at least one value");

    struct Candidate {
        MagnitudeInterval iv;
        std::int64_t exponent;
        bool exact;
    };
    std::uint64_t reconstructions = 0;
    auto make_exact = [&](Candidate& c) {
        if (c.exact) return;
        BigInt n = boost::multiprecision::abs(crt_reconstruct(xs[c.iv.idx].residues()));
        ++reconstructions;
        ledger.counters.record(EventKind::Reconstruction);
        c.iv.lo = n;
        c.iv.hi = std::move(n);
        c.exact = true;
    };

    std::vector<Candidate> round;
    round.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Candidate c{{}, xs[i].exponent(), false};
        if (auto iv = try_magnitude_interval(xs[i], &ledger)) {
            c.iv = *std::move(iv);
        }
        c.iv.idx = i;
        if (c.iv.hi == 0 && c.iv.lo == 0 && !xs[i].residues().is_zero()) make_exact(c);
        if (xs[i].residues().is_zero()) c.exact = true;
        round.push_back(std::move(c));
    }

    auto beats = [&](Candidate& a, Candidate& b) {  // true when a wins (a has the lower index)
        if (Dyadic(a.iv.lo, a.exponent) > Dyadic(b.iv.hi, b.exponent)) return true;
        if (Dyadic(b.iv.lo, b.exponent) > Dyadic(a.iv.hi, a.exponent)) return false;
        make_exact(a);
        make_exact(b);
        return Dyadic(a.iv.lo, a.exponent) >= Dyadic(b.iv.lo, b.exponent);
    };

    while (round.size() > 1) {
        std::vector<Candidate> next;
        next.reserve((round.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < round.size(); i += 2) {
            next.push_back(beats(round[i], round[i + 1]) ? std::move(round[i]) : std::move(round[i + 1]));
        }
        if (round.size() % 2 == 1) next.push_back(std::move(round.back()));
        round = std::move(next);
    }
    return MaxSelection{round.front().iv.idx, round.front().iv, reconstructions};
}

}  // namespace hrfna

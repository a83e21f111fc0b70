#pragma once

// Residue-number-system substrate: modulus sets, channelwise arithmetic,
// centered CRT reconstruction and power-of-two rescaling.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "hrfna/bigint.hpp"
#include "hrfna/errors.hpp"

namespace hrfna {

enum class RoundingMode { FloorDiv, NearestEven };

inline const char* to_string(RoundingMode mode) {
    return mode == RoundingMode::FloorDiv ? "floor_div" : "nearest_even";
}

/// Pairwise-coprime moduli with precomputed CRT constants.
///
/// Immutable after construction and shared between every residue vector
/// bound to it (see ModulusSetPtr).
class ModulusSet {
public:
    struct CrtWeight {
        BigInt cofactor;      // M_i = M / m_i
        std::uint32_t inverse;  // M_i^-1 mod m_i
        BigInt basis;         // M_i * inverse, congruent to 1 mod m_i and 0 mod m_j
    };

    std::size_t size() const noexcept { return moduli_.size(); }
    std::span<const std::uint32_t> moduli() const noexcept { return moduli_; }
    std::uint32_t modulus(std::size_t i) const { return moduli_.at(i); }
    const BigInt& composite() const noexcept { return composite_; }
    std::span<const CrtWeight> crt_weights() const noexcept { return weights_; }
    unsigned frac_precision() const noexcept { return frac_precision_; }

    /// Largest representable magnitude on the positive side, floor(M/2).
    const BigInt& half() const noexcept { return half_; }

    /// True when |v| < M/2, the wrap-free region for centered values.
    bool within_half(const BigInt& magnitude) const { return 2 * magnitude < composite_; }

    bool same_as(const ModulusSet& other) const {
        return this == &other || moduli_ == other.moduli_;
    }

private:
    friend std::shared_ptr<const ModulusSet> make_modulus_set(std::span<const std::uint64_t>, unsigned);

    std::vector<std::uint32_t> moduli_;
    BigInt composite_;
    BigInt half_;
    std::vector<CrtWeight> weights_;
    unsigned frac_precision_ = 96;
};

using ModulusSetPtr = std::shared_ptr<const ModulusSet>;

inline constexpr unsigned kDefaultFracPrecision = 96;

/// The eight largest primes below 2^16; M has bit length 128.
inline constexpr std::uint64_t kDefaultModuli[] = {65521, 65519, 65497, 65479, 65449, 65447, 65437, 65423};

inline ModulusSetPtr make_modulus_set(std::span<const std::uint64_t> moduli,
                                      unsigned frac_precision = kDefaultFracPrecision) {
    if (moduli.empty()) throw Error(ErrorCode::InvalidModulus, "modulus list is empty");
    if (frac_precision == 0) throw Error(ErrorCode::InvalidArgument, "frac_precision must be positive");
    for (std::size_t i = 0; i < moduli.size(); ++i) {
        if (moduli[i] < 2 || moduli[i] > 0xFFFFFFFFULL)
            throw Error(ErrorCode::InvalidModulus,
                        "modulus " + std::to_string(i) + " must lie in [2, 2^32), got " + std::to_string(moduli[i]));
    }
    for (std::size_t i = 0; i < moduli.size(); ++i) {
        for (std::size_t j = i + 1; j < moduli.size(); ++j) {
            const std::uint64_t g = gcd_u64(moduli[i], moduli[j]);
            if (g != 1) throw NotCoprimeError(i, j, g);
        }
    }

    auto ms = std::make_shared<ModulusSet>(ModulusSet{});
    ms->frac_precision_ = frac_precision;
    ms->composite_ = 1;
    for (const auto m : moduli) {
        ms->moduli_.push_back(static_cast<std::uint32_t>(m));
        ms->composite_ *= m;
    }
    ms->half_ = ms->composite_ / 2;
    for (const auto m32 : ms->moduli_) {
        BigInt cofactor = ms->composite_ / m32;
        const auto reduced = static_cast<std::uint64_t>(cofactor % m32);
        const std::uint32_t inv = inverse_mod(reduced, m32);
        BigInt basis = cofactor * inv;
        ms->weights_.push_back({std::move(cofactor), inv, std::move(basis)});
    }
    return ms;
}

inline ModulusSetPtr make_modulus_set(std::initializer_list<std::uint64_t> moduli,
                                      unsigned frac_precision = kDefaultFracPrecision) {
    const std::vector<std::uint64_t> list(moduli);
    return make_modulus_set(std::span<const std::uint64_t>(list), frac_precision);
}

inline ModulusSetPtr default_modulus_set() {
    static const ModulusSetPtr ms = make_modulus_set(std::span<const std::uint64_t>(kDefaultModuli));
    return ms;
}

/// One residue per channel, each strictly below its modulus.
class ResidueVector {
public:
    using Storage = boost::container::small_vector<std::uint32_t, 8>;

    ResidueVector(ModulusSetPtr ms, Storage residues) : ms_(std::move(ms)), residues_(std::move(residues)) {
        if (!ms_) throw Error(ErrorCode::InvalidArgument, "null modulus set");
        if (residues_.size() != ms_->size())
            throw Error(ErrorCode::ChannelCountMismatch, "residue count does not match modulus set");
        for (std::size_t i = 0; i < residues_.size(); ++i) {
            if (residues_[i] >= ms_->modulus(i))
                throw Error(ErrorCode::OutOfRange, "residue " + std::to_string(i) + " not below its modulus");
        }
    }

    static ResidueVector zero(ModulusSetPtr ms) {
        Storage r(ms->size(), 0U);
        return ResidueVector(std::move(ms), std::move(r), Unchecked{});
    }

    const ModulusSet& set() const noexcept { return *ms_; }
    const ModulusSetPtr& set_ptr() const noexcept { return ms_; }
    std::span<const std::uint32_t> residues() const noexcept { return {residues_.data(), residues_.size()}; }
    std::size_t size() const noexcept { return residues_.size(); }
    std::uint32_t operator[](std::size_t i) const { return residues_[i]; }

    bool is_zero() const {
        for (const auto r : residues_)
            if (r != 0) return false;
        return true;
    }

    friend bool operator==(const ResidueVector& a, const ResidueVector& b) {
        return a.ms_->same_as(*b.ms_) && a.residues_ == b.residues_;
    }

private:
    struct Unchecked {};
    ResidueVector(ModulusSetPtr ms, Storage residues, Unchecked)
        : ms_(std::move(ms)), residues_(std::move(residues)) {}

    template <typename Op>
    friend ResidueVector channelwise(const ResidueVector&, const ResidueVector&, Op);
    friend ResidueVector encode(const BigInt&, const ModulusSetPtr&);
    friend ResidueVector encode_unchecked(const BigInt&, const ModulusSetPtr&);
    friend ResidueVector mod_neg(const ResidueVector&);
    friend ResidueVector mod_scale_pow2(const ResidueVector&, std::uint64_t);

    ModulusSetPtr ms_;
    Storage residues_;
};

inline void require_same_binding(const ModulusSet& a, const ModulusSet& b) {
    if (!a.same_as(b)) throw Error(ErrorCode::ChannelCountMismatch, "operands bound to different modulus sets");
}

// Residues of any integer, with no range check (used internally after scaling).
inline ResidueVector encode_unchecked(const BigInt& value, const ModulusSetPtr& ms) {
    ResidueVector::Storage r(ms->size());
    for (std::size_t i = 0; i < ms->size(); ++i) {
        const std::uint32_t m = ms->modulus(i);
        BigInt rem = value % m;  // sign follows the dividend
        auto v = rem.convert_to<std::int64_t>();
        if (v < 0) v += m;
        r[i] = static_cast<std::uint32_t>(v);
    }
    return ResidueVector(ms, std::move(r), ResidueVector::Unchecked{});
}

/// Residues of a value in the centered range |value| < M/2.
inline ResidueVector encode(const BigInt& value, const ModulusSetPtr& ms) {
    if (!ms) throw Error(ErrorCode::InvalidArgument, "null modulus set");
    if (!ms->within_half(boost::multiprecision::abs(value)))
        throw Error(ErrorCode::OutOfRange, "|" + value.str() + "| is not below M/2");
    return encode_unchecked(value, ms);
}

/// The unique N congruent to rv in [-ceil(M/2)+1, floor(M/2)].
inline BigInt crt_reconstruct(const ResidueVector& rv, const ModulusSet& ms) {
    require_same_binding(rv.set(), ms);
    const auto weights = ms.crt_weights();
    BigInt sum = 0;
    for (std::size_t i = 0; i < rv.size(); ++i) {
        if (rv[i] != 0) sum += weights[i].basis * rv[i];
    }
    sum %= ms.composite();
    if (sum > ms.half()) sum -= ms.composite();
    return sum;
}

inline BigInt crt_reconstruct(const ResidueVector& rv) { return crt_reconstruct(rv, rv.set()); }

template <typename Op>
ResidueVector channelwise(const ResidueVector& a, const ResidueVector& b, Op op) {
    require_same_binding(a.set(), b.set());
    ResidueVector::Storage r(a.size());
    const auto mods = a.set().moduli();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = op(a[i], b[i], mods[i]);
    return ResidueVector(a.set_ptr(), std::move(r), ResidueVector::Unchecked{});
}

inline ResidueVector mod_add(const ResidueVector& a, const ResidueVector& b) {
    return channelwise(a, b, [](std::uint64_t x, std::uint64_t y, std::uint64_t m) {
        return static_cast<std::uint32_t>((x + y) % m);
    });
}

inline ResidueVector mod_mul(const ResidueVector& a, const ResidueVector& b) {
    return channelwise(a, b, [](std::uint64_t x, std::uint64_t y, std::uint64_t m) {
        return static_cast<std::uint32_t>(x * y % m);
    });
}

inline ResidueVector mod_neg(const ResidueVector& a) {
    ResidueVector::Storage r(a.size());
    const auto mods = a.set().moduli();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] == 0 ? 0 : mods[i] - a[i];
    return ResidueVector(a.set_ptr(), std::move(r), ResidueVector::Unchecked{});
}

/// Channelwise multiplication by 2^k; exact when |N| * 2^k stays below M/2.
inline ResidueVector mod_scale_pow2(const ResidueVector& a, std::uint64_t k) {
    ResidueVector::Storage r(a.size());
    const auto mods = a.set().moduli();
    for (std::size_t i = 0; i < r.size(); ++i) {
        const std::uint64_t p = pow_mod(2, k, mods[i]);
        r[i] = static_cast<std::uint32_t>(a[i] * p % mods[i]);
    }
    return ResidueVector(a.set_ptr(), std::move(r), ResidueVector::Unchecked{});
}

/// Integer division of a signed value by 2^s under the given rounding mode.
inline BigInt round_shift(const BigInt& value, std::size_t s, RoundingMode mode) {
    if (s == 0) return value;
    BigInt q = floor_shift(value, s);
    if (mode == RoundingMode::FloorDiv) return q;
    const BigInt rem = value - (q << s);  // in [0, 2^s)
    const BigInt twice = rem << 1;
    const BigInt unit = pow2(s);
    if (twice > unit || (twice == unit && (q & 1) != 0)) q += 1;
    return q;
}

struct ScaledResidues {
    ResidueVector residues;
    BigInt rounding_error;  // N - round(N / 2^s) * 2^s
};

inline ScaledResidues scale_and_reencode(const ResidueVector& rv, std::size_t s, RoundingMode mode,
                                         const ModulusSetPtr& ms) {
    const BigInt n = crt_reconstruct(rv, *ms);
    if (s == 0) return {rv, BigInt(0)};
    BigInt q = round_shift(n, s, mode);
    BigInt err = n - (q << s);
    return {encode(q, ms), std::move(err)};
}

}  // namespace hrfna

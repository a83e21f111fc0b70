#pragma once

// Reduced-scale invariant suites behind `hrfna selftest`.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hrfna/bridge.hpp"
#include "hrfna/config.hpp"
#include "hrfna/experiments.hpp"
#include "hrfna/kernels.hpp"

namespace hrfna {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline BigInt random_below(std::mt19937_64& rng, const BigInt& limit) {
    const std::size_t bits = bit_length(limit);
    while (true) {
        BigInt v = 0;
        for (std::size_t got = 0; got < bits; got += 64) v = (v << 64) | BigInt(rng());
        v &= pow2(bits) - 1;
        if (v < limit) return v;
    }
}

/// Uniform integer with |v| <= bound.
inline BigInt random_signed(std::mt19937_64& rng, const BigInt& bound) {
    return random_below(rng, 2 * bound + 1) - bound;
}

inline HybridNumber random_hybrid(std::mt19937_64& rng, const ModulusSetPtr& ms, const BigInt& mag_bound,
                                  std::int64_t exp_span) {
    BigInt n = random_signed(rng, mag_bound);
    const auto f = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(2 * exp_span + 1)) - exp_span;
    if (n == 0) return HybridNumber::zero(ms);
    return HybridNumber(encode(n, ms), f, boost::multiprecision::abs(n));
}

}  // namespace detail

inline SuiteResult suite_crt_roundtrip(const ModulusSetPtr& ms, std::uint64_t seed, std::size_t trials) {
    auto rng = make_stream(seed, 101);
    const BigInt& half = ms->half();
    const BigInt top = ms->within_half(half) ? half : BigInt(half - 1);
    std::vector<BigInt> cases = {0, 1, -1, top, -top};
    for (std::size_t i = 0; i < trials; ++i) cases.push_back(detail::random_signed(rng, top));
    for (const auto& n : cases) {
        if (crt_reconstruct(encode(n, ms)) != n) return {"crt_roundtrip", false, "mismatch at " + n.str()};
    }
    // Bijection on {3,5,7}.
    const auto small = make_modulus_set({3, 5, 7});
    std::set<BigInt> seen;
    for (std::uint32_t a = 0; a < 3; ++a)
        for (std::uint32_t b = 0; b < 5; ++b)
            for (std::uint32_t c = 0; c < 7; ++c) {
                const BigInt n = crt_reconstruct(ResidueVector(small, {a, b, c}));
                if (n < -52 || n > 52) return {"crt_roundtrip", false, "outside centered range"};
                seen.insert(n);
            }
    if (seen.size() != 105) return {"crt_roundtrip", false, "not a bijection on {3,5,7}"};
    return {"crt_roundtrip", true, std::to_string(cases.size()) + " values, 105-vector bijection"};
}

inline SuiteResult suite_mul_exact(const ModulusSetPtr& ms, std::uint64_t seed, std::size_t trials) {
    auto rng = make_stream(seed, 102);
    const std::size_t half_bits = (bit_length(ms->composite()) - 2) / 2;
    const BigInt lim = pow2(half_bits);
    Ledger ledger;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto x = detail::random_hybrid(rng, ms, lim, 200);
        const auto y = detail::random_hybrid(rng, ms, lim, 200);
        if (phi(hybrid_mul(x, y, ledger)) != phi(x) * phi(y)) return {"mul_exact", false, "product mismatch"};
    }
    return {"mul_exact", true, std::to_string(trials) + " products exact"};
}

/// Per-event bound with the mode's own unit: 2^(f+s-1) nearest-even, < 2^(f+s) floor.
inline SuiteResult suite_normalization_bound(const ModulusSetPtr& ms, const NormalizationPolicy& policy,
                                             std::uint64_t seed, std::size_t trials) {
    auto rng = make_stream(seed, 103);
    const BigInt lim = (ms->composite() - 1) / 2;
    std::size_t events = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto x = detail::random_hybrid(rng, ms, lim, 50);
        Ledger ledger;
        const auto y = normalize(x, policy, ledger);
        for (const auto& e : ledger.budget.events()) {
            const std::int64_t top = e.exponent + static_cast<std::int64_t>(e.shift);
            const Dyadic unit = Dyadic::pow2(policy.mode == RoundingMode::NearestEven ? top - 1 : top);
            if (e.bound != unit) return {"normalization_bound", false, "charged bound differs from the unit"};
        }
        const Dyadic err = (phi(x) - phi(y)).abs();
        const Dyadic total = ledger.budget.accumulated();
        const bool ok = policy.mode == RoundingMode::NearestEven ? err <= total : (total.is_zero() ? err.is_zero() : err < total);
        if (!ok) return {"normalization_bound", false, "event error exceeds its bound"};
        if (needs_normalization(y, policy)) return {"normalization_bound", false, "bound still reaches tau"};
        events += ledger.budget.event_count();
    }
    return {"normalization_bound", true,
            std::to_string(events) + " events within the " + std::string(to_string(policy.mode)) + " bound"};
}

inline SuiteResult suite_interval(const ModulusSetPtr& ms, std::uint64_t seed, std::size_t trials) {
    auto rng = make_stream(seed, 104);
    const BigInt lim = (ms->composite() - 1) / 2;
    std::size_t ambiguous = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto x = detail::random_hybrid(rng, ms, lim, 0);
        const BigInt n = boost::multiprecision::abs(crt_reconstruct(x.residues()));
        const auto iv = try_magnitude_interval(x);
        if (!iv) {
            ++ambiguous;
            continue;
        }
        if (iv->lo > n || n > iv->hi) return {"interval", false, "interval misses " + n.str()};
    }
    for (std::size_t t = 0; t < trials / 10 + 1; ++t) {
        const std::size_t len = 1 + rng() % 64;
        std::vector<HybridNumber> xs;
        for (std::size_t i = 0; i < len; ++i) xs.push_back(detail::random_hybrid(rng, ms, pow2(40), 8));
        Ledger ledger;
        const auto sel = select_max_magnitude(xs, ledger);
        for (const auto& x : xs)
            if (phi(x).abs() > phi(xs[sel.index]).abs()) return {"interval", false, "argmax wrong"};
    }
    return {"interval", true, std::to_string(trials) + " containment trials (" + std::to_string(ambiguous) +
                                  " ambiguous), argmax verified"};
}

inline SuiteResult suite_tracker(std::uint64_t seed, std::size_t sequences) {
    auto rng = make_stream(seed, 105);
    const auto ms = make_modulus_set({3, 5, 7});
    auto policy = NormalizationPolicy::defaults(*ms);
    for (std::size_t s = 0; s < sequences; ++s) {
        Ledger ledger;
        HybridNumber acc = detail::random_hybrid(rng, ms, 5, 3);
        for (int step = 0; step < 100; ++step) {
            const HybridNumber v = detail::random_hybrid(rng, ms, 5, 3);
            switch (rng() % 4) {
                case 0: acc = add_normalized(acc, v, policy, ledger); break;
                case 1: acc = mul_normalized(acc, v, policy, ledger); break;
                case 2: acc = mac(acc, v, v, policy, ledger); break;
                default: acc = normalize(negate(acc), policy, ledger); break;
            }
            if (boost::multiprecision::abs(crt_reconstruct(acc.residues())) > acc.bound())
                return {"tracker", false, "bound below the encoded magnitude"};
        }
    }
    return {"tracker", true, std::to_string(sequences) + " op sequences on {3,5,7}"};
}

inline SuiteResult suite_counters(std::uint64_t seed) {
    auto rng = make_stream(seed, 106);
    auto rnd = [&] {
        Counters c;
        c.muls = rng() % 1000;
        c.adds = rng() % 1000;
        c.normalizations = rng() % 10;
        c.reconstructions = rng() % 10;
        return c;
    };
    for (int i = 0; i < 100; ++i) {
        const Counters a = rnd(), b = rnd(), c = rnd();
        if (merge(merge(a, b), c) != merge(a, merge(b, c)) || merge(a, b) != merge(b, a) || merge(a, Counters{}) != a)
            return {"counters", false, "merge is not a commutative monoid"};
    }
    return {"counters", true, "merge associative, commutative, identity"};
}

inline SuiteResult suite_dot(const RunConfig& c, const ResolvedConfig& r) {
    RunConfig small = c;
    small.trials = 2;
    if (!small.seed) small.seed = kDefaultSeed;
    for (const auto d : {Distribution::Uniform, Distribution::LogUniform}) {
        const Json j = run_dot_experiment(small, r, d, 512);
        if (!j.at("budget").at("dominance").get<bool>()) return {"dot", false, "budget dominance failed"};
    }
    return {"dot", true, "budget dominates the exact error on both distributions"};
}

inline SuiteResult suite_rk4(const RunConfig& c, const ResolvedConfig& r) {
    OdeProblem p = c.ode;
    p.steps = 2048;
    p.checkpoint_every = 256;
    const Json j = run_rk4_experiment(c, r, p);
    if (!j.at("budget").at("dominance").get<bool>()) return {"rk4", false, "deviation exceeds the propagated bound"};
    return {"rk4", true, "2048 steps within the propagated bound"};
}

inline SuiteResult suite_convert(const ModulusSetPtr& ms, std::uint64_t seed, std::size_t trials) {
    auto rng = make_stream(seed, 107);
    for (std::size_t i = 0; i < trials; ++i) {
        const double v = draw(rng, (i % 2) ? Distribution::Uniform : Distribution::LogUniform);
        const HybridNumber h = to_hybrid_exact(v, ms);
        const HybridNumber back = hybrid_from_json(Json::parse(to_json(h).dump()), ms);
        if (!(back == h) || phi(back) != Dyadic::from_double(v)) return {"convert", false, "round trip changed a value"};
        const Ratio text = parse_number(phi(h).to_decimal());
        if (!(text == Ratio::of(Dyadic::from_double(v)))) return {"convert", false, "decimal text round trip failed"};
    }
    return {"convert", true, std::to_string(trials) + " record round trips"};
}

inline std::vector<SuiteResult> run_selftest(const RunConfig& c, const ResolvedConfig& r) {
    const std::uint64_t seed = c.seed.value_or(kDefaultSeed);
    std::vector<std::function<SuiteResult()>> suites = {
        [&] { return suite_crt_roundtrip(r.moduli, seed, 2000); },
        [&] { return suite_mul_exact(r.moduli, seed, 1000); },
        [&] { return suite_normalization_bound(r.moduli, r.policy, seed, 500); },
        [&] { return suite_interval(r.moduli, seed, 1000); },
        [&] { return suite_tracker(seed, 100); },
        [&] { return suite_counters(seed); },
        [&] { return suite_dot(c, r); },
        [&] { return suite_rk4(c, r); },
        [&] { return suite_convert(r.moduli, seed, 1000); },
    };
    std::vector<SuiteResult> out;
    for (auto& s : suites) {
        try {
            out.push_back(s());
        } catch (const std::exception& e) {
            out.push_back({"exception", false, e.what()});
        }
    }
    return out;
}

}  // namespace hrfna

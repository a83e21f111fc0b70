#pragma once

// Seeded input generators. The stream is std::mt19937_64 (fully specified by
// the C++ standard) consumed as raw 64-bit words; no standard distribution
// objects are used because their output is implementation-defined.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrfna/errors.hpp"
#include "hrfna/hybrid.hpp"

namespace hrfna {

enum class Distribution {
    Uniform,     // k * 2^-24 with k uniform in [-2^24, 2^24)
    LogUniform,  // random sign, octave uniform in [-20, 19], 24-bit mantissa
};

inline const char* to_string(Distribution d) { return d == Distribution::Uniform ? "uniform" : "log_uniform"; }

inline Distribution parse_distribution(std::string_view name) {
    if (name == "uniform") return Distribution::Uniform;
    if (name == "log_uniform") return Distribution::LogUniform;
    throw Error(ErrorCode::InvalidArgument, "unknown distribution '" + std::string(name) + "'");
}

/// One independent stream per (seed, stream id): the two are mixed with a
/// SplitMix64 finalizer before seeding.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return std::mt19937_64(z ^ (z >> 31));
}

inline double draw(std::mt19937_64& rng, Distribution d) {
    if (d == Distribution::Uniform) {
        const auto k = static_cast<std::int64_t>(rng() >> 39) - (std::int64_t{1} << 24);
        return std::ldexp(static_cast<double>(k), -24);
    }
    const std::uint64_t w = rng();
    const bool negative = (w >> 63) != 0;
    const int octave = static_cast<int>((w >> 32) % 40) - 20;
    const std::uint64_t mantissa = (std::uint64_t{1} << 23) | (rng() >> 41);
    const double v = std::ldexp(static_cast<double>(mantissa), octave - 23);
    return negative ? -v : v;
}

inline std::vector<double> generate(Distribution d, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    auto rng = make_stream(seed, stream);
    std::vector<double> out(n);
    for (auto& v : out) v = draw(rng, d);
    return out;
}

/// Exact hybrid encoding of a double, using its own significant bits as the
/// mantissa width.
inline HybridNumber to_hybrid_exact(double v, const ModulusSetPtr& ms) {
    const Dyadic d = Dyadic::from_double(v);
    const std::size_t bits = d.is_zero() ? 1 : bit_length(boost::multiprecision::abs(d.mantissa()));
    return from_dyadic(d, ms, static_cast<unsigned>(bits));
}

inline std::vector<HybridNumber> to_hybrid_exact(std::span<const double> xs, const ModulusSetPtr& ms) {
    std::vector<HybridNumber> out;
    out.reserve(xs.size());
    for (const double v : xs) out.push_back(to_hybrid_exact(v, ms));
    return out;
}

}  // namespace hrfna

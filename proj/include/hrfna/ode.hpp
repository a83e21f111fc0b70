#pragma once

// Right-hand-side catalog shared by the hybrid integrator and the reference
// integrator. Holds no arithmetic so both sides stay independent.

#include <cstdint>
#include <string>
#include <string_view>

#include "hrfna/errors.hpp"

namespace hrfna {

enum class RhsKind {
    Zero,          // y' = 0
    LinearDecay,   // y' = -lambda * y
    Logistic,      // y' = y * (1 - y)
    CubicDamping,  // y' = y - y^3
};

inline const char* to_string(RhsKind kind) {
    switch (kind) {
        case RhsKind::Zero: return "zero";
        case RhsKind::LinearDecay: return "linear_decay";
        case RhsKind::Logistic: return "logistic";
        case RhsKind::CubicDamping: return "cubic_damping";
    }
    return "unknown";
}

inline RhsKind parse_rhs_kind(std::string_view name) {
    if (name == "zero") return RhsKind::Zero;
    if (name == "linear_decay") return RhsKind::LinearDecay;
    if (name == "logistic") return RhsKind::Logistic;
    if (name == "cubic_damping") return RhsKind::CubicDamping;
    throw Error(ErrorCode::UnsupportedRhs, "unknown right-hand side '" + std::string(name) + "'");
}

/// Scalar autonomous problem. Numeric fields are exact text ("0.5", "2^-7",
/// "3*2^-4"); h and lambda must be dyadic.
struct OdeProblem {
    RhsKind rhs = RhsKind::Logistic;
    std::string lambda = "1";
    std::string y0 = "0.5";
    std::string h = "2^-7";
    std::uint64_t steps = 100000;
    std::uint64_t checkpoint_every = 1024;
};

}  // namespace hrfna

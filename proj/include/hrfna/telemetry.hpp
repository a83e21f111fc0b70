#pragma once

#include <cstdint>

namespace hrfna {

enum class EventKind {
    Mul,
    Add,
    Mac,
    SyncExact,
    SyncLossy,
    Normalization,
    Reconstruction,
    IntervalEval,
};

/// Operation and normalization-event counts for one run.
///
/// Counters travel with results and are merged by componentwise sum, which
/// makes them a commutative monoid with the default-constructed value as
/// identity. `normalizations_above_tau` counts the subset of normalization
/// events whose exactly reconstructed magnitude really reached tau (the
/// rest fired because the tracker bound is conservative).
struct Counters {
    std::uint64_t muls = 0;
    std::uint64_t adds = 0;
    std::uint64_t macs = 0;
    std::uint64_t syncs_exact = 0;
    std::uint64_t syncs_lossy = 0;
    std::uint64_t normalizations = 0;
    std::uint64_t reconstructions = 0;
    std::uint64_t interval_evals = 0;
    std::uint64_t normalizations_above_tau = 0;

    void record(EventKind kind, std::uint64_t n = 1) {
        switch (kind) {
            case EventKind::Mul: muls += n; break;
            case EventKind::Add: adds += n; break;
            case EventKind::Mac: macs += n; break;
            case EventKind::SyncExact: syncs_exact += n; break;
            case EventKind::SyncLossy: syncs_lossy += n; break;
            case EventKind::Normalization: normalizations += n; break;
            case EventKind::Reconstruction: reconstructions += n; break;
            case EventKind::IntervalEval: interval_evals += n; break;
        }
    }

    Counters& merge(const Counters& o) {
        muls += o.muls;
        adds += o.adds;
        macs += o.macs;
        syncs_exact += o.syncs_exact;
        syncs_lossy += o.syncs_lossy;
        normalizations += o.normalizations;
        reconstructions += o.reconstructions;
        interval_evals += o.interval_evals;
        normalizations_above_tau += o.normalizations_above_tau;
        return *this;
    }

    /// Multiplications plus additions; a MAC contributes one of each.
    std::uint64_t arithmetic_ops() const { return muls + adds; }

    friend bool operator==(const Counters&, const Counters&) = default;
};

inline Counters record(Counters c, EventKind kind) {
    c.record(kind);
    return c;
}

inline Counters merge(Counters a, const Counters& b) { return a.merge(b); }

struct AmortizationReport {
    std::uint64_t arithmetic_ops = 0;
    std::uint64_t normalizations = 0;
    std::uint64_t normalizations_above_tau = 0;
    double ops_per_normalization = 0.0;  // tracker-triggered events
    double ops_per_true_trigger = 0.0;   // events with reconstructed |N| >= tau
    double reconstructions_per_op = 0.0;
    bool no_events = true;
};

inline AmortizationReport amortization_report(const Counters& c) {
    AmortizationReport r;
    r.arithmetic_ops = c.arithmetic_ops();
    r.normalizations = c.normalizations;
    r.normalizations_above_tau = c.normalizations_above_tau;
    r.no_events = c.normalizations == 0;
    const auto ops = static_cast<double>(r.arithmetic_ops);
    r.ops_per_normalization = ops / static_cast<double>(c.normalizations == 0 ? 1 : c.normalizations);
    r.ops_per_true_trigger =
        ops / static_cast<double>(c.normalizations_above_tau == 0 ? 1 : c.normalizations_above_tau);
    r.reconstructions_per_op =
        static_cast<double>(c.reconstructions) / (r.arithmetic_ops == 0 ? 1.0 : ops);
    return r;
}

}  // namespace hrfna

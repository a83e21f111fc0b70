#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "hrfna/dyadic.hpp"
#include "hrfna/telemetry.hpp"

namespace hrfna {

enum class BudgetEventKind { Normalization, LossySync };

inline const char* to_string(BudgetEventKind kind) {
    return kind == BudgetEventKind::Normalization ? "normalization" : "lossy_sync";
}

struct BudgetEvent {
    std::uint64_t op_index = 0;  // arithmetic ops completed before the event
    BudgetEventKind kind = BudgetEventKind::Normalization;
    std::uint64_t shift = 0;     // s
    std::int64_t exponent = 0;   // f at the event, before scaling
    Dyadic bound;                // absolute-error bound contributed in value space
};

/// Running sum of per-event worst-case error bounds.
///
/// The accumulated bound and event count always cover every charge; the
/// event log itself is capped at `log_limit` entries so that long runs keep
/// bounded memory (`dropped_events` counts what was not logged).
class ErrorBudget {
public:
    static constexpr std::size_t kDefaultLogLimit = std::size_t{1} << 16;

    ErrorBudget() : ErrorBudget(kDefaultLogLimit) {}
    explicit ErrorBudget(std::size_t log_limit) : log_limit_(log_limit) {}

    void charge(BudgetEvent event) {
        accumulated_ += event.bound;
        ++event_count_;
        if (events_.size() < log_limit_) {
            events_.push_back(std::move(event));
        } else {
            ++dropped_;
        }
    }

    const Dyadic& accumulated() const noexcept { return accumulated_; }
    std::uint64_t event_count() const noexcept { return event_count_; }
    const std::vector<BudgetEvent>& events() const noexcept { return events_; }
    std::uint64_t dropped_events() const noexcept { return dropped_; }
    std::size_t log_limit() const noexcept { return log_limit_; }

    /// Totals commute; the log keeps this budget's events first.
    ErrorBudget& merge(const ErrorBudget& other) {
        accumulated_ += other.accumulated_;
        event_count_ += other.event_count_;
        dropped_ += other.dropped_;
        for (const auto& e : other.events_) {
            if (events_.size() < log_limit_) {
                events_.push_back(e);
            } else {
                ++dropped_;
            }
        }
        return *this;
    }

private:
    Dyadic accumulated_;
    std::uint64_t event_count_ = 0;
    std::vector<BudgetEvent> events_;
    std::size_t log_limit_;
    std::uint64_t dropped_ = 0;
};

/// Budget plus counters: the sink every hybrid operation reports into.
struct Ledger {
    ErrorBudget budget;
    Counters counters;

    std::uint64_t op_index() const { return counters.arithmetic_ops(); }

    Ledger& merge(const Ledger& other) {
        budget.merge(other.budget);
        counters.merge(other.counters);
        return *this;
    }
};

}  // namespace hrfna

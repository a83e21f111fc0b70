#pragma once

// Composite kernels on hybrid numbers: dot product, matrix multiply and a
// fixed-step RK4 integrator with a propagated error bound.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hrfna/hybrid.hpp"
#include "hrfna/ode.hpp"

namespace hrfna {

/// Outputs of a kernel run. Values are row-major; `phis` holds the single
/// final reconstruction of each output and `element_budgets` the error
/// budget charged while computing it.
struct KernelResult {
    std::size_t rows = 1;
    std::size_t cols = 1;
    std::vector<HybridNumber> values;
    std::vector<Dyadic> phis;
    std::vector<Dyadic> element_budgets;
    Ledger ledger;
};

/// Worker count from HRFNA_THREADS, else hardware concurrency (at least 1).
inline unsigned worker_count() {
    if (const char* env = std::getenv("HRFNA_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min<unsigned long>(v, 1024));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1U : hw;
}

namespace detail {

struct DotOutput {
    HybridNumber value;
    Dyadic phi;
    Ledger ledger;
};

// Sequential left-to-right accumulation, audited every check_every steps.
template <typename RowAt, typename ColAt>
DotOutput dot_sequence(std::size_t n, RowAt x_at, ColAt y_at, const NormalizationPolicy& policy) {
    Ledger ledger;
    const HybridNumber& x0 = x_at(0);
    const HybridNumber& y0 = y_at(0);
    HybridNumber acc = HybridNumber::zero(x0.set_ptr(), x0.exponent() + y0.exponent());
    for (std::size_t j = 0; j < n; ++j) {
        acc = mac(acc, x_at(j), y_at(j), policy, ledger);
        if ((j + 1) % policy.check_every == 0) acc = audit(acc, ledger);
    }
    acc = audit(acc, ledger);
    if (needs_normalization(acc, policy)) acc = normalize(acc, policy, ledger);
    Dyadic value = phi(acc);
    ledger.counters.record(EventKind::Reconstruction);
    if (value.is_zero() && acc.exponent() != 0) acc = HybridNumber::zero(acc.set_ptr());
    return {std::move(acc), std::move(value), std::move(ledger)};
}

}  // namespace detail

/// Hybrid dot product: one accumulator, one final reconstruction.
inline KernelResult dot_product(std::span<const HybridNumber> xs, std::span<const HybridNumber> ys,
                                const NormalizationPolicy& policy) {
    if (xs.size() != ys.size()) throw Error(ErrorCode::LengthMismatch, "dot_product operands differ in length");
    if (xs.empty()) throw Error(ErrorCode::EmptyInput, "dot_product needs at least one element");
    auto out = detail::dot_sequence(
        xs.size(), [&](std::size_t j) -> const HybridNumber& { return xs[j]; },
        [&](std::size_t j) -> const HybridNumber& { return ys[j]; }, policy);
    KernelResult r;
    r.element_budgets.push_back(out.ledger.budget.accumulated());
    r.values.push_back(std::move(out.value));
    r.phis.push_back(std::move(out.phi));
    r.ledger = std::move(out.ledger);
    return r;
}

/// C = A * B with A (n x k) and B (k x m) row-major. Each output is one dot
/// product in a fixed order; rows are spread over worker threads and the
/// per-element ledgers are merged in row-major order, so the result does
/// not depend on the worker count.
inline KernelResult matmul(std::span<const HybridNumber> a, std::size_t n, std::size_t k,
                           std::span<const HybridNumber> b, std::size_t k2, std::size_t m,
                           const NormalizationPolicy& policy, unsigned workers = 0) {
    if (k != k2) throw Error(ErrorCode::DimensionMismatch, "inner dimensions differ");
    if (a.size() != n * k || b.size() != k2 * m)
        throw Error(ErrorCode::DimensionMismatch, "matrix storage does not match its shape");
    if (n == 0 || m == 0 || k == 0) throw Error(ErrorCode::EmptyInput, "matmul needs non-empty matrices");

    std::vector<std::vector<HybridNumber>> columns(m);
    for (std::size_t j = 0; j < m; ++j) {
        columns[j].reserve(k);
        for (std::size_t t = 0; t < k; ++t) columns[j].push_back(b[t * m + j]);
    }

    std::vector<std::optional<detail::DotOutput>> cells(n * m);
    auto run_row = [&](std::size_t i) {
        for (std::size_t j = 0; j < m; ++j) {
            cells[i * m + j] = detail::dot_sequence(
                k, [&](std::size_t t) -> const HybridNumber& { return a[i * k + t]; },
                [&](std::size_t t) -> const HybridNumber& { return columns[j][t]; }, policy);
        }
    };

    const unsigned count = std::max(1U, std::min<unsigned>(workers == 0 ? worker_count() : workers,
                                                           static_cast<unsigned>(n)));
    if (count == 1) {
        for (std::size_t i = 0; i < n; ++i) run_row(i);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> failures(count);
        for (unsigned w = 0; w < count; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += count) run_row(i);
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& f : failures)
            if (f) std::rethrow_exception(f);
    }

    KernelResult r;
    r.rows = n;
    r.cols = m;
    r.values.reserve(n * m);
    for (auto& cell : cells) {
        r.element_budgets.push_back(cell->ledger.budget.accumulated());
        r.ledger.merge(cell->ledger);
        r.values.push_back(std::move(cell->value));
        r.phis.push_back(std::move(cell->phi));
    }
    return r;
}

// ---------------------------------------------------------------------------
// RK4
// ---------------------------------------------------------------------------

struct Rk4Checkpoint {
    std::uint64_t step = 0;
    Dyadic value;
    Dyadic propagated_bound;  // bound on |value - exact RK4 iterate|
    Dyadic raw_budget;        // sum of normalization/sync charges so far
};

struct Rk4Result {
    HybridNumber final_state;
    std::vector<Rk4Checkpoint> checkpoints;
    Dyadic propagated_bound;
    Dyadic coefficient_error;  // |encoded 1/6 - 1/6|
    Ledger ledger;
};

namespace detail {

// Closed double interval with outward rounding after every operation.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    static Interval point(double v) { return {v, v}; }

    static double down(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }
    static double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }

    friend Interval operator+(Interval a, Interval b) { return {down(a.lo + b.lo), up(a.hi + b.hi)}; }
    friend Interval operator-(Interval a, Interval b) { return {down(a.lo - b.hi), up(a.hi - b.lo)}; }
    friend Interval operator*(Interval a, Interval b) {
        const double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
        return {down(*std::min_element(p, p + 4)), up(*std::max_element(p, p + 4))};
    }
    double magnitude() const { return std::max(std::fabs(lo), std::fabs(hi)); }
};

// Value and derivative with respect to the state, both as intervals.
struct Dual {
    Interval v;
    Interval d;
    friend Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
    friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
    friend Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
    static Dual constant(Interval c) { return {c, Interval::point(0.0)}; }
};

inline Interval enclose(const Dyadic& v) { return {v.to_double_down(), v.to_double_up()}; }

inline Dual rhs_dual(RhsKind kind, const Dual& y, Interval lambda) {
    switch (kind) {
        case RhsKind::Zero: return Dual::constant(Interval::point(0.0));
        case RhsKind::LinearDecay: return Dual::constant(Interval{-lambda.hi, -lambda.lo}) * y;
        case RhsKind::Logistic: return y * (Dual::constant(Interval::point(1.0)) - y);
        case RhsKind::CubicDamping: return y - y * y * y;
    }
    throw Error(ErrorCode::UnsupportedRhs, "unsupported right-hand side");
}

// sup |d Psi / dy| over the interval ys, where Psi is one RK4 step.
inline double step_lipschitz(RhsKind kind, Interval ys, Interval h, Interval lambda) {
    const Interval sixth{Interval::down(1.0 / 6.0), Interval::up(1.0 / 6.0)};
    const Interval half_h = h * Interval::point(0.5);
    const Dual y{ys, Interval::point(1.0)};
    const Dual k1 = rhs_dual(kind, y, lambda);
    const Dual k2 = rhs_dual(kind, y + Dual::constant(half_h) * k1, lambda);
    const Dual k3 = rhs_dual(kind, y + Dual::constant(half_h) * k2, lambda);
    const Dual k4 = rhs_dual(kind, y + Dual::constant(h) * k3, lambda);
    const Dual sum = k1 + k2 + k2 + k3 + k3 + k4;
    const Dual next = y + Dual::constant(h * sixth) * sum;
    return next.d.magnitude();
}

// A hybrid value and a bound on its distance from the exact quantity it
// stands for.
struct Tracked {
    HybridNumber v;
    Dyadic err;
};

constexpr std::size_t kErrorBits = 64;

class TrackedArith {
public:
    TrackedArith(const NormalizationPolicy& policy, Ledger& ledger) : policy_(policy), ledger_(ledger) {}

    Tracked add(const Tracked& a, const Tracked& b) {
        const Dyadic before = ledger_.budget.accumulated();
        HybridNumber c = add_normalized(a.v, b.v, policy_, ledger_);
        const Dyadic charged = ledger_.budget.accumulated() - before;
        return {std::move(c), (a.err + b.err + charged).round_up(kErrorBits)};
    }

    Tracked mul(const Tracked& a, const Tracked& b) {
        const Dyadic before = ledger_.budget.accumulated();
        HybridNumber c = mul_normalized(a.v, b.v, policy_, ledger_);
        const Dyadic charged = ledger_.budget.accumulated() - before;
        Dyadic err = a.v.magnitude_bound() * b.err + b.v.magnitude_bound() * a.err + a.err * b.err + charged;
        return {std::move(c), err.round_up(kErrorBits)};
    }

    Tracked neg(const Tracked& a) { return {negate(a.v), a.err}; }

private:
    const NormalizationPolicy& policy_;
    Ledger& ledger_;
};

inline Ratio parse_dyadic_field(const std::string& text, ErrorCode code, const char* what) {
    Ratio r;
    try {
        r = parse_number(text);
    } catch (const Error&) {
        throw Error(code, std::string(what) + " is not a number: '" + text + "'");
    }
    if (!r.is_dyadic()) throw Error(code, std::string(what) + " must be a dyadic rational, got '" + text + "'");
    return r;
}

inline unsigned significant_bits(const Ratio& r) {
    BigInt m = boost::multiprecision::abs(r.num);
    if (m == 0) return 1;
    m >>= boost::multiprecision::lsb(m);
    return static_cast<unsigned>(bit_length(m));
}

}  // namespace detail

/// Classical RK4 on hybrid numbers. Every step's local rounding is bounded
/// by running error analysis; the global bound follows
/// E_{n+1} = L_n * E_n + local_n with L_n = sup |Psi'| over [y_n - E_n, y_n + E_n].
inline Rk4Result rk4_integrate(const OdeProblem& prob, const ModulusSetPtr& ms, const NormalizationPolicy& policy) {
    using detail::Tracked;
    if (prob.steps == 0) throw Error(ErrorCode::InvalidArgument, "steps must be at least 1");
    if (prob.checkpoint_every == 0) throw Error(ErrorCode::InvalidArgument, "checkpoint_every must be positive");
    const Ratio h = detail::parse_dyadic_field(prob.h, ErrorCode::NonDyadicStep, "step size h");
    if (h.num <= 0) throw Error(ErrorCode::NonDyadicStep, "step size h must be positive");
    const Ratio lambda = detail::parse_dyadic_field(prob.lambda, ErrorCode::UnsupportedRhs, "lambda");
    const Ratio y0 = parse_number(prob.y0);

    Rk4Result out{HybridNumber::zero(ms), {}, Dyadic(), Dyadic(), Ledger{}};
    Ledger& ledger = out.ledger;
    detail::TrackedArith arith(policy, ledger);

    const unsigned coef_bits = std::max(2U, policy.target_bits);
    auto exact_const = [&](const Ratio& r) {
        return Tracked{from_rational(r, ms, detail::significant_bits(r)), Dyadic()};
    };
    const Tracked h_t = exact_const(h);
    const Tracked half_h_t = exact_const(Ratio::make(h.num, h.den * 2));
    const Tracked one_t = exact_const(Ratio{1, 1});
    const Tracked neg_lambda_t = exact_const(Ratio{-lambda.num, lambda.den});

    HybridNumber sixth = from_rational(Ratio::make(1, 6), ms, coef_bits);
    out.coefficient_error = detail::rounding_unit(sixth.exponent(), RoundingMode::NearestEven);
    const Tracked h6_t = arith.mul(h_t, Tracked{std::move(sixth), out.coefficient_error});

    auto rhs = [&](const Tracked& y) -> Tracked {
        switch (prob.rhs) {
            case RhsKind::Zero: return Tracked{HybridNumber::zero(ms), Dyadic()};
            case RhsKind::LinearDecay: return arith.mul(neg_lambda_t, y);
            case RhsKind::Logistic: return arith.mul(y, arith.add(one_t, arith.neg(y)));
            case RhsKind::CubicDamping: return arith.add(y, arith.neg(arith.mul(arith.mul(y, y), y)));
        }
        throw Error(ErrorCode::UnsupportedRhs, "unsupported right-hand side");
    };

    HybridNumber y = from_rational(y0, ms, coef_bits);
    Dyadic bound = Ratio::of(phi(y)) == y0 ? Dyadic() : detail::rounding_unit(y.exponent(), RoundingMode::NearestEven);

    const auto h_dyadic = *h.to_dyadic();
    const auto lambda_dyadic = *lambda.to_dyadic();
    const detail::Interval h_iv = detail::enclose(h_dyadic);
    const detail::Interval lambda_iv = detail::enclose(lambda_dyadic);

    for (std::uint64_t n = 1; n <= prob.steps; ++n) {
        const Tracked yt{y, Dyadic()};
        const Tracked k1 = rhs(yt);
        const Tracked k2 = rhs(arith.add(yt, arith.mul(half_h_t, k1)));
        const Tracked k3 = rhs(arith.add(yt, arith.mul(half_h_t, k2)));
        const Tracked k4 = rhs(arith.add(yt, arith.mul(h_t, k3)));
        const Tracked sum = arith.add(arith.add(k1, arith.add(k2, k2)), arith.add(arith.add(k3, k3), k4));
        Tracked next = arith.add(yt, arith.mul(h6_t, sum));

        const Dyadic current = phi(y);
        const detail::Interval ys{(current - bound).to_double_down(), (current + bound).to_double_up()};
        const double lip = detail::step_lipschitz(prob.rhs, ys, h_iv, lambda_iv);
        if (!std::isfinite(lip)) throw Error(ErrorCode::InvalidArgument, "trajectory left the double range");
        bound = (Dyadic::from_double(lip) * bound + next.err).round_up(detail::kErrorBits);
        y = std::move(next.v);

        if (n % prob.checkpoint_every == 0 || n == prob.steps)
            out.checkpoints.push_back({n, phi(y), bound, ledger.budget.accumulated()});
    }
    out.final_state = std::move(y);
    out.propagated_bound = std::move(bound);
    return out;
}

}  // namespace hrfna

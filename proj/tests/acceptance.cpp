// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
//   acceptance [--long]
//
// --long runs the RK4 criterion with the long step count.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hrfna/bridge.hpp"
#include "hrfna/experiments.hpp"
#include "hrfna/selftest.hpp"

using namespace hrfna;

namespace {

// Tolerances.
constexpr double kDotRmsLimit = 1e-6;
constexpr double kMatmulRmsLimit = 2e-6;
constexpr double kFlatSlope = 0.5;       // below this a log-log RMS trend counts as not growing
constexpr double kMinOpsPerEvent = 500.0;

constexpr std::size_t kCrtTrials = 100000;
constexpr std::size_t kMulTrials = 10000;
constexpr std::size_t kEventTrials = 4000;
constexpr std::size_t kMinEvents = 1000;
constexpr std::size_t kRegimeTrials = 1000;
constexpr std::size_t kContainmentTrials = 10000;
constexpr std::size_t kArgmaxLists = 1000;
constexpr std::size_t kArgmaxMaxLen = 256;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%2d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double num(const Json& j) { return j.is_null() ? 1e300 : j.get<double>(); }

double slope_of(const std::vector<double>& n, const std::vector<double>& v) { return log_log_slope(n, v); }

// Every kernel run of the suite, with its policy variant, in a stable order.
Json run_workloads(const RunConfig& c, const ResolvedConfig& r, const OdeProblem& ode) {
    Json ws = Json::array();
    for (const auto d : c.distributions)
        for (const auto n : c.lengths) ws.push_back(run_dot_experiment(c, r, d, n));
    for (const auto n : c.matrix_sizes) ws.push_back(run_matmul_experiment(c, r, Distribution::Uniform, n));
    ws.push_back(run_rk4_experiment(c, r, ode));

    // Tight policies that force normalization events inside the kernels.
    RunConfig small = c;
    small.trials = 2;
    for (const auto mode : {RoundingMode::NearestEven, RoundingMode::FloorDiv}) {
        ResolvedConfig tight = r;
        tight.policy.tau = pow2(80);
        tight.policy.target_bits = 40;
        tight.policy.mode = mode;
        const std::string tag = std::string("tau=2^80 beta=40 ") + to_string(mode);
        Json dot = run_dot_experiment(small, tight, Distribution::LogUniform, 4096);
        dot["policy"] = tag;
        ws.push_back(std::move(dot));
        Json mm = run_matmul_experiment(small, tight, Distribution::LogUniform, 32);
        mm["policy"] = tag;
        ws.push_back(std::move(mm));
        OdeProblem p = ode;
        p.steps = 4096;
        p.checkpoint_every = 256;
        Json rk = run_rk4_experiment(small, tight, p);
        rk["policy"] = tag;
        ws.push_back(std::move(rk));
    }
    return ws;
}

const Json* find_dot(const Json& ws, Distribution d, std::size_t n) {
    for (const auto& w : ws)
        if (w.at("workload") == "dot" && !w.contains("policy") && w.at("distribution") == to_string(d) &&
            w.at("length") == n)
            return &w;
    return nullptr;
}

const Json* find_matmul(const Json& ws, std::size_t n) {
    for (const auto& w : ws)
        if (w.at("workload") == "matmul" && !w.contains("policy") && w.at("size") == n) return &w;
    return nullptr;
}

const Json* find_rk4(const Json& ws) {
    for (const auto& w : ws)
        if (w.at("workload") == "rk4" && !w.contains("policy")) return &w;
    return nullptr;
}

// ---------------------------------------------------------------------------

Outcome crt_roundtrip(const ModulusSetPtr& ms, std::uint64_t seed) {
    const auto r = suite_crt_roundtrip(ms, seed, kCrtTrials);
    return {r.passed, r.detail};
}

Outcome mul_exact(const ModulusSetPtr& ms, std::uint64_t seed) {
    const auto r = suite_mul_exact(ms, seed, kMulTrials);
    return {r.passed, r.detail};
}

Outcome per_event_bound(const ModulusSetPtr& ms, std::uint64_t seed) {
    auto rng = make_stream(seed, 301);
    const BigInt lim = (ms->composite() - 1) / 2;
    std::string detail;
    for (const auto mode : {RoundingMode::NearestEven, RoundingMode::FloorDiv}) {
        auto policy = NormalizationPolicy::defaults(*ms);
        policy.mode = mode;
        std::size_t events = 0;
        for (std::size_t i = 0; i < kEventTrials; ++i) {
            // Magnitudes spread over the whole range so shifts vary.
            const std::size_t bits = 1 + rng() % bit_length(lim);
            BigInt bound = pow2(bits) - 1;
            if (bound > lim) bound = lim;
            const auto x = detail::random_hybrid(rng, ms, bound, 300);
            Ledger ledger;
            const auto y = normalize(x, policy, ledger);
            const auto& log = ledger.budget.events();
            if (log.empty()) continue;
            if (log.size() != 1) return {false, "normalize produced more than one event"};
            const auto& e = log[0];
            const std::int64_t top = e.exponent + static_cast<std::int64_t>(e.shift);
            const Dyadic err = phi(x) - phi(y);
            const bool ok = mode == RoundingMode::NearestEven
                                ? err.abs() <= Dyadic::pow2(top - 1)
                                : (!(err < Dyadic()) && err < Dyadic::pow2(top));
            if (!ok) return {false, std::string(to_string(mode)) + " event error exceeds its bound"};
            if (e.bound != detail::rounding_unit(top, mode)) return {false, "charged bound differs from the event unit"};
            ++events;
        }
        if (events < kMinEvents) return {false, std::to_string(events) + " events is too few"};
        detail += std::string(detail.empty() ? "" : ", ") + std::to_string(events) + " " + to_string(mode) + " events";
    }
    return {true, detail + " within bound"};
}

Outcome regime_bound(const ModulusSetPtr& ms, std::uint64_t seed) {
    auto rng = make_stream(seed, 302);
    const BigInt lim = (ms->composite() - 1) / 2;
    std::size_t events = 0;
    for (const unsigned s : {8U, 16U, 32U, 63U}) {
        NormalizationPolicy policy;
        policy.tau = pow2(2 * s - 1);
        policy.target_bits = 2 * s - 2;
        policy.fixed_shift = s;
        policy.validate(*ms);
        const std::size_t lo_bits = 2 * s, hi_bits = bit_length(lim);
        for (std::size_t i = 0; i < kRegimeTrials; ++i) {
            const std::size_t bits = lo_bits + rng() % (hi_bits - lo_bits + 1);
            BigInt top = pow2(bits) - 1;
            if (top > lim) top = lim;
            BigInt n = detail::random_below(rng, top - policy.tau + 1) + policy.tau;
            if (rng() & 1) n = -n;
            const auto f = static_cast<std::int64_t>(rng() % 201) - 100;
            const HybridNumber x(encode(n, ms), f, boost::multiprecision::abs(n));

            Ledger ledger;
            HybridNumber cur = x;
            while (needs_normalization(cur, policy)) {
                const BigInt before = crt_reconstruct(cur.residues());
                if (boost::multiprecision::abs(before) < policy.tau) return {false, "event below tau"};
                const auto step = detail::normalize_once(cur, policy, ledger, Dyadic(BigInt(1)));
                if (step.shift != s) return {false, "shift differs from the fixed shift"};
                const BigInt after = crt_reconstruct(step.value.residues());
                const BigInt err = boost::multiprecision::abs(before - (after << s));
                // |err| / |N| <= 2^-s
                if ((err << s) > boost::multiprecision::abs(before))
                    return {false, "relative error above 2^-" + std::to_string(s)};
                cur = step.value;
                ++events;
            }
            Ledger again;
            if (!(normalize(x, policy, again) == cur)) return {false, "normalize disagrees with the event chain"};
        }
    }
    return {events >= kMinEvents, std::to_string(events) + " fixed-shift events (s = 8, 16, 32, 63; tau = 2^(2s-1))"};
}

Outcome dominance(const Json& ws) {
    std::size_t runs = 0;
    for (const auto& w : ws) {
        ++runs;
        if (!w.at("budget").at("dominance").get<bool>()) {
            std::string label = w.at("workload").get<std::string>();
            if (w.contains("policy")) label += " (" + w.at("policy").get<std::string>() + ")";
            return {false, "budget exceeded in " + label};
        }
    }
    return {runs > 0, std::to_string(runs) + " kernel runs, error within the accumulated budget in each"};
}

Outcome dot_accuracy(const Json& ws, const RunConfig& c) {
    double worst = 0.0;
    std::string trend;
    bool trend_tested = false;
    std::vector<double> ns(c.lengths.begin(), c.lengths.end());
    for (const auto d : c.distributions) {
        std::vector<double> rms;
        std::set<std::uint64_t> event_counts;
        for (const auto n : c.lengths) {
            const Json* w = find_dot(ws, d, n);
            if (!w) return {false, "missing dot run"};
            const double v = num(w->at("systems").at("hrfna").at("rms"));
            if (!(v < kDotRmsLimit))
                return {false, std::string(to_string(d)) + " N=" + std::to_string(n) + " rms " + fmt("%.3g", v)};
            worst = std::max(worst, v);
            rms.push_back(v);
            event_counts.insert(w->at("budget").at("events").get<std::uint64_t>());
        }
        const double sl = slope_of(ns, rms);
        trend += std::string(", ") + to_string(d) + " slope " + fmt("%.3f", sl);
        if (event_counts.size() == 1) {
            trend_tested = true;
            trend += " (constant event count " + std::to_string(*event_counts.begin()) + ")";
            if (!(sl < kFlatSlope)) return {false, std::string(to_string(d)) + " rms grows with N" + trend};
        } else {
            trend += " (event count varies)";
        }
    }
    if (!trend_tested) return {false, "no distribution kept a constant event count" + trend};
    return {true, "max rms " + fmt("%.3g", worst) + trend};
}

Outcome matmul_accuracy(const Json& ws, const RunConfig& c) {
    std::string detail;
    for (const auto n : c.matrix_sizes) {
        const Json* w = find_matmul(ws, n);
        if (!w) return {false, "missing matmul run"};
        const double v = num(w->at("systems").at("hrfna").at("rms"));
        detail += std::string(detail.empty() ? "" : ", ") + std::to_string(n) + ": rms " + fmt("%.3g", v);
        if (!(v < kMatmulRmsLimit)) return {false, detail};
    }
    const Json* a = find_matmul(ws, 64);
    const Json* b = find_matmul(ws, 128);
    if (!a || !b) return {false, "missing 64 or 128 run"};
    const double ra = num(a->at("systems").at("hrfna").at("rms"));
    const double rb = num(b->at("systems").at("hrfna").at("rms"));
    const double predicted = b->at("budget").at("budget_rms").get<double>();
    detail += ", 128 vs 64 growth " + fmt("%.3g", rb - ra) + " <= budget rms " + fmt("%.3g", predicted);
    return {rb <= ra + predicted, detail};
}

Outcome rk4_bounded(const Json& ws) {
    const Json* w = find_rk4(ws);
    if (!w) return {false, "missing rk4 run"};
    const auto& b = w->at("budget");
    const auto& st = w->at("stability");
    const bool ok = b.at("dominance").get<bool>() && st.at("bounded").get<bool>();
    return {ok, std::to_string(w->at("steps").get<std::uint64_t>()) + " steps, " +
                    std::to_string(w->at("checkpoints").get<std::uint64_t>()) + " checkpoints, max deviation/bound " +
                    fmt("%.3g", b.at("max_deviation_over_bound").get<double>()) + ", deviation halves " +
                    fmt("%.3g", st.at("first_half_max_deviation").get<double>()) + " / " +
                    fmt("%.3g", st.at("second_half_max_deviation").get<double>())};
}

Outcome amortization(const Json& ws, const RunConfig& c) {
    const std::size_t n = c.lengths.back();
    const Json* w = find_dot(ws, Distribution::Uniform, n);
    if (!w) return {false, "missing uniform dot run"};
    const auto& a = w->at("amortization");
    const double per = a.at("ops_per_normalization").get<double>();
    const double per_true = a.at("ops_per_true_trigger").get<double>();
    const auto& k = w->at("counters");
    const std::uint64_t rounding_events = w->at("budget").at("events").get<std::uint64_t>();
    const double ops = a.at("arithmetic_ops").get<double>();
    const double per_event = ops / static_cast<double>(std::max<std::uint64_t>(rounding_events, 1));
    const bool ok = per >= kMinOpsPerEvent && per_true >= kMinOpsPerEvent && per_event >= kMinOpsPerEvent;
    return {ok, "N=" + std::to_string(n) + ", " + fmt("%.0f", ops) + " ops, " +
                    std::to_string(k.at("normalizations").get<std::uint64_t>()) + " normalizations, ops/normalization " +
                    fmt("%.0f", per) + ", ops/true trigger " + fmt("%.0f", per_true) + ", ops/rounding event " +
                    fmt("%.0f", per_event) + (a.at("no_events").get<bool>() ? " (no events)" : "")};
}

Outcome interval_soundness(const ModulusSetPtr& ms, std::uint64_t seed) {
    auto rng = make_stream(seed, 303);
    const BigInt lim = (ms->composite() - 1) / 2;
    std::size_t ambiguous = 0;
    for (std::size_t i = 0; i < kContainmentTrials; ++i) {
        const std::size_t bits = 1 + rng() % bit_length(lim);
        BigInt bound = pow2(bits) - 1;
        if (bound > lim) bound = lim;
        const auto x = detail::random_hybrid(rng, ms, bound, 50);
        const BigInt n = boost::multiprecision::abs(crt_reconstruct(x.residues()));
        const auto iv = try_magnitude_interval(x);
        if (!iv) {
            ++ambiguous;
            continue;
        }
        if (iv->lo > n || n > iv->hi) return {false, "interval misses " + n.str()};
    }
    std::size_t ties = 0;
    for (std::size_t t = 0; t < kArgmaxLists; ++t) {
        const std::size_t len = 1 + rng() % kArgmaxMaxLen;
        const BigInt bound = (rng() & 1) ? lim : pow2(40);
        std::vector<HybridNumber> xs;
        for (std::size_t i = 0; i < len; ++i) {
            if (i > 0 && rng() % 8 == 0) {
                // Same value, possibly in another representation.
                const auto& prev = xs[rng() % i];
                if (prev.bound() * 2 <= lim && (rng() & 1))
                    xs.emplace_back(encode(crt_reconstruct(prev.residues()) * 2, ms), prev.exponent() - 1,
                                    prev.bound() * 2);
                else
                    xs.push_back(prev);
                continue;
            }
            xs.push_back(detail::random_hybrid(rng, ms, bound, 4));
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < len; ++i)
            if (phi(xs[i]).abs() > phi(xs[best]).abs()) best = i;
        for (std::size_t i = best + 1; i < len; ++i)
            if (phi(xs[i]).abs() == phi(xs[best]).abs()) {
                ++ties;
                break;
            }
        Ledger ledger;
        const auto sel = select_max_magnitude(xs, ledger);
        if (sel.index != best)
            return {false, "argmax " + std::to_string(sel.index) + " vs brute force " + std::to_string(best)};
    }
    return {true, std::to_string(kContainmentTrials) + " containment trials, 0 violations (" +
                      std::to_string(ambiguous) + " ambiguous), " + std::to_string(kArgmaxLists) +
                      " argmax lists match brute force (" + std::to_string(ties) + " with tied maxima)"};
}

Outcome baseline_ordering(const Json& ws, const RunConfig& c) {
    const Distribution d = Distribution::LogUniform;
    std::vector<double> ns, bfp, bfp_rel, hr, hr_rel;
    for (const auto n : c.lengths) {
        const Json* w = find_dot(ws, d, n);
        if (!w) return {false, "missing log-uniform dot run"};
        const auto& s = w->at("systems");
        if (!s.contains("bfp")) return {false, "bfp baseline missing"};
        ns.push_back(static_cast<double>(n));
        bfp.push_back(num(s.at("bfp").at("rms")));
        bfp_rel.push_back(num(s.at("bfp").at("rel_rms")));
        hr.push_back(num(s.at("hrfna").at("rms")));
        hr_rel.push_back(num(s.at("hrfna").at("rel_rms")));
    }
    bool increasing = true;
    for (std::size_t i = 1; i < bfp.size(); ++i) increasing = increasing && bfp[i] > bfp[i - 1];
    const double sb = slope_of(ns, bfp_rel), sh = slope_of(ns, hr_rel);
    const bool ordered = bfp.back() > hr.back();
    const bool ok = ordered && increasing && sb >= kFlatSlope && sh < kFlatSlope;
    return {ok, "N=" + std::to_string(c.lengths.back()) + ": bfp rms " + fmt("%.3g", bfp.back()) + " vs hrfna " +
                    fmt("%.3g", hr.back()) + "; bfp rms " + (increasing ? "increasing" : "not increasing") +
                    "; relative rms slope bfp " + fmt("%.3f", sb) + ", hrfna " + fmt("%.3f", sh) +
                    " (absolute rms slope bfp " + fmt("%.3f", slope_of(ns, bfp)) + ", hrfna " +
                    fmt("%.3f", slope_of(ns, hr)) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
    bool long_mode = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--long") == 0) {
            long_mode = true;
        } else {
            std::fprintf(stderr, "usage: acceptance [--long]\n");
            return 1;
        }
    }

    RunConfig c = default_config();
    c.long_mode = long_mode;
    const ResolvedConfig r = resolve(c);
    const std::uint64_t seed = *c.seed;
    OdeProblem ode = c.ode;
    if (long_mode) ode.steps = c.long_steps;

    report(1, "crt round trip", [&] { return crt_roundtrip(r.moduli, seed); });
    report(2, "multiplication exact", [&] { return mul_exact(r.moduli, seed); });
    report(3, "per-event normalization bound", [&] { return per_event_bound(r.moduli, seed); });
    report(4, "fixed-shift relative bound", [&] { return regime_bound(r.moduli, seed); });

    setenv("HRFNA_THREADS", "1", 1);
    Json ws;
    try {
        ws = run_workloads(c, r, ode);
    } catch (const std::exception& e) {
        std::printf("FAIL kernel runs: %s\n", e.what());
        return 1;
    }

    report(5, "budget dominance", [&] { return dominance(ws); });
    report(6, "dot product accuracy", [&] { return dot_accuracy(ws, c); });
    report(7, "matmul accuracy", [&] { return matmul_accuracy(ws, c); });
    report(8, "rk4 logistic bounded", [&] { return rk4_bounded(ws); });
    report(9, "normalization amortization", [&] { return amortization(ws, c); });
    report(10, "interval soundness", [&] { return interval_soundness(r.moduli, seed); });
    report(11, "baseline ordering", [&] { return baseline_ordering(ws, c); });
    report(12, "determinism across thread counts", [&] {
        const std::string one = report_body(make_report("acceptance", c, r, ws));
        setenv("HRFNA_THREADS", "4", 1);
        const std::string four = report_body(make_report("acceptance", c, r, run_workloads(c, r, ode)));
        return Outcome{one == four, "HRFNA_THREADS 1 vs 4: " + std::to_string(one.size()) + "-byte report bodies " +
                                        (one == four ? "identical" : "differ")};
    });

    std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED", failures);
    return failures == 0 ? 0 : 1;
}

#pragma once

// Workload drivers shared by the CLI, the self-test and the acceptance
// suite. Each returns a JSON fragment of the run report; nothing in a
// fragment depends on timing or on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hrfna/bridge.hpp"
#include "hrfna/config.hpp"
#include "hrfna/io.hpp"
#include "hrfna/kernels.hpp"
#include "hrfna/telemetry.hpp"
#include "hrfna/workloads.hpp"

namespace hrfna {

inline constexpr const char* kExactOracle = "exact_rational";
inline constexpr const char* kPrngName = "mt19937_64 raw 64-bit words, SplitMix64-mixed stream seeds";

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

inline Json metrics_json(const oracle::ErrorMetrics& m) {
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    return Json{{"rms", num(m.rms)}, {"max_abs", num(m.max_abs)}, {"max_rel", num(m.max_rel)},
                {"rel_rms", num(m.rel_rms)}, {"n", m.n}};
}

inline Json counters_json(const Counters& c) {
    return Json{{"muls", c.muls},
                {"adds", c.adds},
                {"macs", c.macs},
                {"syncs_exact", c.syncs_exact},
                {"syncs_lossy", c.syncs_lossy},
                {"normalizations", c.normalizations},
                {"normalizations_above_tau", c.normalizations_above_tau},
                {"reconstructions", c.reconstructions},
                {"interval_evals", c.interval_evals}};
}

inline Json amortization_json(const Counters& c) {
    const auto r = amortization_report(c);
    return Json{{"arithmetic_ops", r.arithmetic_ops},
                {"normalizations", r.normalizations},
                {"normalizations_above_tau", r.normalizations_above_tau},
                {"ops_per_normalization", r.ops_per_normalization},
                {"ops_per_true_trigger", r.ops_per_true_trigger},
                {"reconstructions_per_op", r.reconstructions_per_op},
                {"no_events", r.no_events}};
}

inline Json dyadic_json(const Dyadic& d) { return Json{{"upper", d.to_double_up()}, {"exact", d.to_string()}}; }

inline Json config_json(const RunConfig& c, const ResolvedConfig& r) {
    Json moduli = Json::array();
    for (const auto m : r.moduli->moduli()) moduli.push_back(std::to_string(m));
    Json dists = Json::array();
    for (const auto d : c.distributions) dists.push_back(to_string(d));
    return Json{
        {"moduli", moduli},
        {"composite", r.moduli->composite().str()},
        {"frac_precision", r.moduli->frac_precision()},
        {"policy",
         {{"tau", r.policy.tau.str()},
          {"target_bits", r.policy.target_bits},
          {"mode", to_string(r.policy.mode)},
          {"check_every", r.policy.check_every},
          {"fixed_shift", r.policy.fixed_shift ? Json(*r.policy.fixed_shift) : Json(nullptr)}}},
        {"seed", c.seed ? Json(*c.seed) : Json(nullptr)},
        {"prng", kPrngName},
        {"baselines", c.baselines},
        {"long", c.long_mode},
        {"workload",
         {{"distributions", dists},
          {"lengths", c.lengths},
          {"trials", c.trials},
          {"matrix_sizes", c.matrix_sizes},
          {"x_file", c.x_file},
          {"y_file", c.y_file},
          {"a_file", c.a_file},
          {"b_file", c.b_file}}},
        {"ode",
         {{"rhs", to_string(c.ode.rhs)},
          {"lambda", c.ode.lambda},
          {"y0", c.ode.y0},
          {"h", c.ode.h},
          {"steps", c.ode.steps},
          {"long_steps", c.long_steps},
          {"checkpoint_every", c.ode.checkpoint_every},
          {"oracle_bits", c.oracle_bits}}},
        {"bfp",
         {{"block_size", c.bfp.block_size},
          {"mantissa_bits", c.bfp.mantissa_bits},
          {"accumulator_bits", c.bfp.accumulator_bits}}},
    };
}

inline bool wants(const RunConfig& c, const char* baseline) {
    return std::find(c.baselines.begin(), c.baselines.end(), baseline) != c.baselines.end();
}

inline std::uint64_t require_seed(const RunConfig& c) {
    if (!c.seed) throw Error(ErrorCode::ConfigError, "run.seed is required for generated inputs (or pass --seed)");
    return *c.seed;
}

/// Stream id for one generated vector or matrix.
inline std::uint64_t stream_id(std::uint64_t kind, Distribution d, std::uint64_t size, std::uint64_t trial,
                               std::uint64_t side) {
    return (((kind * 4 + static_cast<std::uint64_t>(d)) * 0x100000001ULL + size) * 4096 + trial) * 2 + side;
}

/// Least-squares slope of log(max(v, floor)) against log(n).
inline double log_log_slope(const std::vector<double>& n, const std::vector<double>& v, double floor = 1e-300) {
    const std::size_t k = n.size();
    if (k < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double x = std::log(n[i]);
        const double y = std::log(std::max(v[i], floor));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = static_cast<double>(k) * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (static_cast<double>(k) * sxy - sx * sy) / den;
}

// ---------------------------------------------------------------------------
// Dot product
// ---------------------------------------------------------------------------

/// One batch of dot products: hybrid result, exact oracle and baselines on
/// the same inputs.
struct DotBatch {
    std::vector<oracle::Rational> exact;
    std::vector<oracle::Rational> hybrid;
    std::vector<oracle::Rational> budgets;
    std::vector<double> binary32, binary64;
    std::vector<oracle::Rational> bfp;
    Ledger ledger;
    bool dominance = true;
    std::size_t exact_matches = 0;
};

inline void run_dot_case(DotBatch& b, std::span<const double> x, std::span<const double> y, const RunConfig& c,
                         const ResolvedConfig& r) {
    const auto hx = to_hybrid_exact(x, r.moduli);
    const auto hy = to_hybrid_exact(y, r.moduli);
    const KernelResult k = dot_product(hx, hy, r.policy);
    oracle::Rational exact = oracle::exact_dot(x, y);
    oracle::Rational got = to_rational(k.phis[0]);
    oracle::Rational budget = to_rational(k.element_budgets[0]);
    if (oracle::Rational(abs(got - exact)) > budget) b.dominance = false;
    if (got == exact) ++b.exact_matches;
    b.ledger.merge(k.ledger);
    if (wants(c, "binary32")) b.binary32.push_back(static_cast<double>(oracle::binary32_dot(x, y)));
    if (wants(c, "binary64")) b.binary64.push_back(oracle::binary64_dot(x, y));
    if (wants(c, "bfp")) b.bfp.push_back(oracle::bfp_dot(x, y, c.bfp));
    b.exact.push_back(std::move(exact));
    b.hybrid.push_back(std::move(got));
    b.budgets.push_back(std::move(budget));
}

inline Json batch_json(const DotBatch& b, const RunConfig& c) {
    Json systems;
    systems["hrfna"] = metrics_json(oracle::rms_error(std::span<const oracle::Rational>(b.hybrid), b.exact));
    if (wants(c, "binary32")) systems["binary32"] = metrics_json(oracle::rms_error(std::span<const double>(b.binary32), b.exact));
    if (wants(c, "binary64")) systems["binary64"] = metrics_json(oracle::rms_error(std::span<const double>(b.binary64), b.exact));
    if (wants(c, "bfp")) systems["bfp"] = metrics_json(oracle::rms_error(std::span<const oracle::Rational>(b.bfp), b.exact));

    oracle::Rational max_budget = 0;
    for (const auto& v : b.budgets)
        if (v > max_budget) max_budget = v;
    // RMS of the per-output budgets: the error level the budget model predicts.
    std::vector<oracle::Rational> zeros(b.budgets.size());
    const auto budget_rms = oracle::rms_error(std::span<const oracle::Rational>(b.budgets), zeros).rms;
    return Json{{"oracle", kExactOracle},
                {"systems", systems},
                {"budget",
                 {{"dominance", b.dominance},
                  {"max_element_budget", oracle::to_double(max_budget)},
                  {"budget_rms", budget_rms},
                  {"events", b.ledger.budget.event_count()}}},
                {"exact_matches", b.exact_matches},
                {"counters", counters_json(b.ledger.counters)},
                {"amortization", amortization_json(b.ledger.counters)}};
}

inline Json run_dot_experiment(const RunConfig& c, const ResolvedConfig& r, Distribution d, std::size_t length) {
    const std::uint64_t seed = require_seed(c);
    DotBatch b;
    for (std::size_t t = 0; t < c.trials; ++t) {
        const auto x = generate(d, length, seed, stream_id(1, d, length, t, 0));
        const auto y = generate(d, length, seed, stream_id(1, d, length, t, 1));
        run_dot_case(b, x, y, c, r);
    }
    Json j = batch_json(b, c);
    j["workload"] = "dot";
    j["distribution"] = to_string(d);
    j["length"] = length;
    j["trials"] = c.trials;
    return j;
}

/// Per distribution, log-log slope of each system's RMS and relative RMS
/// against length.
inline Json dot_trends(const Json& workloads) {
    std::map<std::string, std::map<std::string, std::vector<double>>> rms, rel;
    std::map<std::string, std::vector<double>> lengths;
    for (const auto& w : workloads) {
        if (w.at("workload") != "dot" || !w.contains("distribution")) continue;
        const std::string d = w.at("distribution");
        lengths[d].push_back(w.at("length").get<double>());
        for (const auto& [sys, m] : w.at("systems").items()) {
            rms[d][sys].push_back(m.at("rms").is_null() ? 1e300 : m.at("rms").get<double>());
            rel[d][sys].push_back(m.at("rel_rms").is_null() ? 1e300 : m.at("rel_rms").get<double>());
        }
    }
    Json out = Json::object();
    for (const auto& [d, systems] : rms) {
        for (const auto& [sys, v] : systems) {
            out[d][sys] = {{"rms_slope", log_log_slope(lengths[d], v)},
                           {"rel_rms_slope", log_log_slope(lengths[d], rel[d][sys])}};
        }
    }
    return out;
}

/// Dot product of explicit vectors (values rounded to the nearest double if
/// they are not already binary64 numbers).
inline Json run_dot_files(const RunConfig& c, const ResolvedConfig& r) {
    const auto xs = parse_vector_jsonl(read_file(c.x_file));
    const auto ys = parse_vector_jsonl(read_file(c.y_file));
    if (xs.size() != ys.size()) throw Error(ErrorCode::LengthMismatch, "x and y files differ in length");
    if (xs.empty()) throw Error(ErrorCode::EmptyInput, "input vectors are empty");
    std::vector<double> x, y;
    std::size_t rounded = 0;
    auto convert = [&](const Ratio& q, std::vector<double>& out) {
        const oracle::Rational exact(mpz_class(q.num.str()), mpz_class(q.den.str()));
        const double v = oracle::to_double(exact);
        if (oracle::to_rational(v) != exact) ++rounded;
        out.push_back(v);
    };
    for (const auto& q : xs) convert(q, x);
    for (const auto& q : ys) convert(q, y);
    DotBatch b;
    run_dot_case(b, x, y, c, r);
    Json j = batch_json(b, c);
    j["workload"] = "dot";
    j["source"] = "files";
    j["length"] = x.size();
    j["inputs_rounded_to_binary64"] = rounded;
    j["result"] = b.hybrid.front().get_str();
    j["exact"] = b.exact.front().get_str();
    return j;
}

// ---------------------------------------------------------------------------
// Matrix multiply
// ---------------------------------------------------------------------------

inline Json run_matmul_arrays(std::span<const double> a, std::size_t n, std::size_t k, std::span<const double> bm,
                              std::size_t m, const RunConfig& c, const ResolvedConfig& r) {
    const auto ha = to_hybrid_exact(a, r.moduli);
    const auto hb = to_hybrid_exact(bm, r.moduli);
    const KernelResult res = matmul(ha, n, k, hb, k, m, r.policy);
    const auto exact = oracle::exact_matmul(a, n, k, bm, k, m);
    std::vector<oracle::Rational> got = to_rationals(std::span<const Dyadic>(res.phis));
    std::vector<oracle::Rational> budgets = to_rationals(std::span<const Dyadic>(res.element_budgets));
    bool dominance = true;
    std::size_t matches = 0;
    oracle::Rational max_budget = 0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        if (oracle::Rational(abs(got[i] - exact[i])) > budgets[i]) dominance = false;
        if (got[i] == exact[i]) ++matches;
        if (budgets[i] > max_budget) max_budget = budgets[i];
    }
    Json systems;
    systems["hrfna"] = metrics_json(oracle::rms_error(std::span<const oracle::Rational>(got), exact));
    if (wants(c, "binary32")) {
        const auto v = oracle::binary32_matmul(a, n, k, bm, k, m);
        systems["binary32"] = metrics_json(oracle::rms_error(std::span<const double>(v), exact));
    }
    if (wants(c, "binary64")) {
        const auto v = oracle::binary64_matmul(a, n, k, bm, k, m);
        systems["binary64"] = metrics_json(oracle::rms_error(std::span<const double>(v), exact));
    }
    if (wants(c, "bfp")) {
        const auto v = oracle::bfp_matmul(a, n, k, bm, k, m, c.bfp);
        systems["bfp"] = metrics_json(oracle::rms_error(std::span<const oracle::Rational>(v), exact));
    }
    std::vector<oracle::Rational> zeros(budgets.size());
    return Json{{"workload", "matmul"},
                {"rows", n},
                {"inner", k},
                {"cols", m},
                {"oracle", kExactOracle},
                {"systems", systems},
                {"budget",
                 {{"dominance", dominance},
                  {"max_element_budget", oracle::to_double(max_budget)},
                  {"budget_rms", oracle::rms_error(std::span<const oracle::Rational>(budgets), zeros).rms},
                  {"events", res.ledger.budget.event_count()}}},
                {"exact_matches", matches},
                {"counters", counters_json(res.ledger.counters)},
                {"amortization", amortization_json(res.ledger.counters)}};
}

inline Json run_matmul_experiment(const RunConfig& c, const ResolvedConfig& r, Distribution d, std::size_t size) {
    const std::uint64_t seed = require_seed(c);
    const auto a = generate(d, size * size, seed, stream_id(2, d, size, 0, 0));
    const auto b = generate(d, size * size, seed, stream_id(2, d, size, 0, 1));
    Json j = run_matmul_arrays(a, size, size, b, size, c, r);
    j["distribution"] = to_string(d);
    j["size"] = size;
    return j;
}

inline Json run_matmul_files(const RunConfig& c, const ResolvedConfig& r) {
    const auto a = parse_matrix_jsonl(read_file(c.a_file));
    const auto b = parse_matrix_jsonl(read_file(c.b_file));
    if (a.cols != b.rows) throw Error(ErrorCode::DimensionMismatch, "inner dimensions differ");
    auto to_doubles = [](const MatrixText& m) {
        std::vector<double> out;
        for (const auto& q : m.values)
            out.push_back(oracle::to_double(oracle::Rational(mpz_class(q.num.str()), mpz_class(q.den.str()))));
        return out;
    };
    const auto da = to_doubles(a);
    const auto db = to_doubles(b);
    Json j = run_matmul_arrays(da, a.rows, a.cols, db, b.cols, c, r);
    j["source"] = "files";
    return j;
}

// ---------------------------------------------------------------------------
// RK4
// ---------------------------------------------------------------------------

/// Max deviation over the second half of the checkpoints may not exceed this
/// multiple of the first half's (with a small absolute floor).
inline constexpr double kBlowUpFactor = 8.0;
inline constexpr double kBlowUpFloor = 0x1p-70;

inline Json run_rk4_experiment(const RunConfig& c, const ResolvedConfig& r, const OdeProblem& prob) {
    const Rk4Result res = rk4_integrate(prob, r.moduli, r.policy);
    const auto ref = oracle::highprec_rk4(prob, c.oracle_bits);
    if (ref.size() != res.checkpoints.size()) throw Error(ErrorCode::InvalidArgument, "checkpoint mismatch");

    // The reference itself is rounded at oracle_bits; this slack covers it.
    oracle::Rational slack(1);
    mpq_div_2exp(slack.get_mpq_t(), slack.get_mpq_t(), c.oracle_bits - 56);

    bool dominance = true;
    std::vector<double> dev;
    std::vector<oracle::Rational> got, exact;
    double max_bound = 0.0;
    double max_ratio = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const auto& cp = res.checkpoints[i];
        oracle::Rational v = to_rational(cp.value);
        const oracle::Rational d = abs(v - ref[i].value);
        const oracle::Rational bound = to_rational(cp.propagated_bound);
        if (d > bound + slack) dominance = false;
        dev.push_back(oracle::to_double(d));
        max_bound = std::max(max_bound, cp.propagated_bound.to_double_up());
        if (bound > 0) max_ratio = std::max(max_ratio, oracle::to_double(oracle::Rational(d / bound)));
        got.push_back(std::move(v));
        exact.push_back(ref[i].value);
    }
    const std::size_t half = dev.size() / 2;
    const double first = half == 0 ? 0.0 : *std::max_element(dev.begin(), dev.begin() + static_cast<long>(half));
    const double second = *std::max_element(dev.begin() + static_cast<long>(half), dev.end());
    const bool bounded = second <= kBlowUpFactor * std::max(first, kBlowUpFloor);

    Json systems;
    systems["hrfna"] = metrics_json(oracle::rms_error(std::span<const oracle::Rational>(got), exact));
    if (wants(c, "binary32")) {
        const auto v = oracle::float_rk4<float>(prob);
        systems["binary32"] = metrics_json(oracle::rms_error(std::span<const double>(v), exact));
    }
    if (wants(c, "binary64")) {
        const auto v = oracle::float_rk4<double>(prob);
        systems["binary64"] = metrics_json(oracle::rms_error(std::span<const double>(v), exact));
    }
    return Json{{"workload", "rk4"},
                {"rhs", to_string(prob.rhs)},
                {"h", prob.h},
                {"y0", prob.y0},
                {"steps", prob.steps},
                {"checkpoints", ref.size()},
                {"oracle", "mpfr_" + std::to_string(c.oracle_bits)},
                {"systems", systems},
                {"final_value", res.checkpoints.back().value.to_double()},
                {"budget",
                 {{"dominance", dominance},
                  {"propagated_bound", dyadic_json(res.propagated_bound)},
                  {"max_propagated_bound", max_bound},
                  {"max_deviation_over_bound", max_ratio},
                  {"raw_event_budget", dyadic_json(res.ledger.budget.accumulated())},
                  {"coefficient_error", dyadic_json(res.coefficient_error)},
                  {"events", res.ledger.budget.event_count()}}},
                {"stability",
                 {{"first_half_max_deviation", first},
                  {"second_half_max_deviation", second},
                  {"bounded", bounded}}},
                {"counters", counters_json(res.ledger.counters)},
                {"amortization", amortization_json(res.ledger.counters)}};
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json make_report(const std::string& command, const RunConfig& c, const ResolvedConfig& r, Json workloads) {
    Json body{{"tool", "hrfna"}, {"command", command}, {"config", config_json(c, r)}, {"workloads", std::move(workloads)}};
    const Json trends = dot_trends(body.at("workloads"));
    if (!trends.empty()) body["dot_trends"] = trends;
    return body;
}

/// The deterministic part of a report, serialized.
inline std::string report_body(const Json& report) {
    Json body = report;
    body.erase("timing");
    return body.dump(2);
}

inline std::string workload_label(const Json& w) {
    std::string label = w.at("workload").get<std::string>();
    if (w.contains("distribution")) label += "/" + w.at("distribution").get<std::string>();
    if (w.contains("length")) label += " n=" + std::to_string(w.at("length").get<std::size_t>());
    if (w.contains("size")) label += " " + std::to_string(w.at("size").get<std::size_t>()) + "x" +
                                     std::to_string(w.at("size").get<std::size_t>());
    if (w.contains("steps")) label += " steps=" + std::to_string(w.at("steps").get<std::uint64_t>());
    if (w.contains("source")) label += " (" + w.at("source").get<std::string>() + ")";
    return label;
}

inline std::string fmt_num(const Json& v) {
    if (v.is_null()) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v.get<double>());
    return buf;
}

/// One row per (workload, system): workload,system,oracle,rms,max_abs,max_rel,rel_rms,n
inline std::string report_csv(const Json& report) {
    std::string out = "workload,system,oracle,rms,max_abs,max_rel,rel_rms,n\n";
    for (const auto& w : report.at("workloads")) {
        for (const auto& [sys, m] : w.at("systems").items()) {
            out += "\"" + workload_label(w) + "\"," + sys + "," + w.at("oracle").get<std::string>() + "," +
                   fmt_num(m.at("rms")) + "," + fmt_num(m.at("max_abs")) + "," + fmt_num(m.at("max_rel")) + "," +
                   fmt_num(m.at("rel_rms")) + "," + std::to_string(m.at("n").get<std::size_t>()) + "\n";
        }
    }
    return out;
}

inline std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

inline std::string report_text(const Json& report) {
    std::string out = "hrfna " + report.at("command").get<std::string>() + "\n";
    const Json& cfg = report.at("config");
    out += "seed " + (cfg.at("seed").is_null() ? std::string("none") : cfg.at("seed").dump()) + ", tau " +
           cfg.at("policy").at("tau").get<std::string>() + ", beta " + cfg.at("policy").at("target_bits").dump() +
           ", mode " + cfg.at("policy").at("mode").get<std::string>() + "\n\n";
    out += pad("workload", 34) + pad("system", 10) + pad("rms", 12) + pad("rel_rms", 12) + pad("max_abs", 12) +
           "oracle\n";
    for (const auto& w : report.at("workloads")) {
        for (const auto& [sys, m] : w.at("systems").items()) {
            out += pad(workload_label(w), 34) + pad(sys, 10) + pad(fmt_num(m.at("rms")), 12) +
                   pad(fmt_num(m.at("rel_rms")), 12) + pad(fmt_num(m.at("max_abs")), 12) +
                   w.at("oracle").get<std::string>() + "\n";
        }
        const Json& b = w.at("budget");
        const Json& a = w.at("amortization");
        out += pad("", 34) + "budget dominance " + (b.at("dominance").get<bool>() ? "yes" : "NO") + ", events " +
               b.at("events").dump() + ", ops/normalization " + fmt_num(a.at("ops_per_normalization")) +
               (a.at("no_events").get<bool>() ? " (no events)" : "") + "\n";
    }
    if (report.contains("timing")) out += "\nwall clock " + fmt_num(report.at("timing").at("wall_seconds")) + " s\n";
    return out;
}

}  // namespace hrfna

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "hrfna/experiments.hpp"
#include "hrfna/selftest.hpp"

using namespace hrfna;

TEST(Counters, RecordAndMerge) {
    Counters c;
    c = record(c, EventKind::Mul);
    c = record(c, EventKind::Add);
    c = record(c, EventKind::Normalization);
    EXPECT_EQ(c.muls, 1U);
    EXPECT_EQ(c.arithmetic_ops(), 2U);
    const Counters d = merge(c, c);
    EXPECT_EQ(d.normalizations, 2U);
    EXPECT_EQ(merge(c, Counters{}), c);
}

TEST(Counters, MonoidProperty) {
    const auto r = suite_counters(61);
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Amortization, Ratios) {
    Counters c;
    c.muls = 600;
    c.adds = 400;
    c.normalizations = 4;
    c.normalizations_above_tau = 1;
    c.reconstructions = 5;
    const auto r = amortization_report(c);
    EXPECT_EQ(r.arithmetic_ops, 1000U);
    EXPECT_DOUBLE_EQ(r.ops_per_normalization, 250.0);
    EXPECT_DOUBLE_EQ(r.ops_per_true_trigger, 1000.0);
    EXPECT_DOUBLE_EQ(r.reconstructions_per_op, 0.005);
    EXPECT_FALSE(r.no_events);
    EXPECT_TRUE(amortization_report(Counters{}).no_events);
}

TEST(Budget, LogCapKeepsTotals) {
    ErrorBudget b(3);
    for (int i = 0; i < 10; ++i) b.charge(BudgetEvent{0, BudgetEventKind::Normalization, 1, i, Dyadic::pow2(i)});
    EXPECT_EQ(b.event_count(), 10U);
    EXPECT_EQ(b.events().size(), 3U);
    EXPECT_EQ(b.dropped_events(), 7U);
    EXPECT_EQ(b.accumulated(), Dyadic(BigInt(1023)));
}

TEST(Budget, MergeIsOrderedAndAdditive) {
    Ledger a, b;
    a.budget.charge(BudgetEvent{0, BudgetEventKind::LossySync, 2, 0, Dyadic::pow2(1)});
    b.budget.charge(BudgetEvent{0, BudgetEventKind::Normalization, 3, 0, Dyadic::pow2(2)});
    b.counters.muls = 7;
    a.merge(b);
    EXPECT_EQ(a.budget.accumulated(), Dyadic(BigInt(6)));
    ASSERT_EQ(a.budget.events().size(), 2U);
    EXPECT_EQ(a.budget.events()[0].kind, BudgetEventKind::LossySync);
    EXPECT_EQ(a.counters.muls, 7U);
}

TEST(Budget, EventsCarryOpIndex) {
    const auto ms = default_modulus_set();
    const auto policy = NormalizationPolicy::defaults(*ms);
    Ledger ledger;
    ledger.counters.muls = 41;
    const BigInt n = pow2(120);
    normalize(HybridNumber(encode(n, ms), 0, n), policy, ledger);
    ASSERT_EQ(ledger.budget.events().size(), 1U);
    EXPECT_EQ(ledger.budget.events()[0].op_index, 41U);
    EXPECT_EQ(ledger.budget.events()[0].shift, 58U);
}

TEST(Trends, LogLogSlope) {
    const std::vector<double> n = {1024, 4096, 16384, 65536};
    std::vector<double> v;
    for (const double x : n) v.push_back(3.0 * std::sqrt(x));
    EXPECT_NEAR(log_log_slope(n, v), 0.5, 1e-12);
    EXPECT_NEAR(log_log_slope(n, {0, 0, 0, 0}), 0.0, 1e-12);
}

TEST(Report, BodyExcludesTimingAndIsStable) {
    RunConfig c = default_config();
    c.trials = 1;
    const auto r = resolve(c);
    Json w = Json::array({run_dot_experiment(c, r, Distribution::Uniform, 64)});
    Json rep = make_report("dotprod", c, r, w);
    Json timed = rep;
    timed["timing"] = Json{{"wall_seconds", 1.5}};
    EXPECT_EQ(report_body(rep), report_body(timed));
    EXPECT_EQ(report_body(rep), report_body(make_report("dotprod", c, r, w)));
    const std::string csv = report_csv(rep);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "workload,system,oracle,rms,max_abs,max_rel,rel_rms,n");
    EXPECT_NE(report_text(timed).find("wall clock"), std::string::npos);
    EXPECT_TRUE(rep.at("workloads")[0].at("budget").at("dominance").get<bool>());
    EXPECT_TRUE(rep.contains("dot_trends"));
}

TEST(Report, RequiresSeedForGeneratedInputs) {
    RunConfig c;
    const auto r = resolve(c);
    try {
        run_dot_experiment(c, r, Distribution::Uniform, 8);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
}

TEST(Io, HybridJsonRoundTrip) {
    const auto ms = default_modulus_set();
    const auto x = from_real(-0.3, ms, 24);
    const Json j = to_json(x);
    EXPECT_EQ(hybrid_from_json(j, ms), x);
    Json bad = j;
    bad["bound"] = "1";
    EXPECT_THROW(hybrid_from_json(bad, ms, 4), ParseError);
    Json short_rs = j;
    short_rs["residues"].erase(0);
    EXPECT_THROW(hybrid_from_json(short_rs, ms), ParseError);
}

TEST(Io, JsonlLineNumbers) {
    const auto lines = parse_jsonl("{\"v\": \"1\"}\n\n{\"v\": 2.5}\n");
    ASSERT_EQ(lines.size(), 2U);
    EXPECT_EQ(lines[1].line, 3U);
    EXPECT_EQ(value_record(lines[1]), Ratio::make(5, 2));
    try {
        parse_jsonl("{\"v\": 1}\n{oops\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2U);
    }
}

TEST(Io, MatrixHeader) {
    const auto m = parse_matrix_jsonl("{\"rows\": 1, \"cols\": 2}\n{\"v\": \"1\"}\n{\"v\": \"-3*2^-2\"}\n");
    EXPECT_EQ(m.rows, 1U);
    EXPECT_EQ(m.values[1], Ratio::make(-3, 4));
    EXPECT_THROW(parse_matrix_jsonl("{\"rows\": 2, \"cols\": 2}\n{\"v\": 1}\n"), ParseError);
}

TEST(Io, AtomicWrite) {
    const auto dir = std::filesystem::temp_directory_path() / "hrfna_io_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "out.txt").string();
    write_atomic(path, "one");
    write_atomic(path, "two");
    EXPECT_EQ(read_file(path), "two");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
    EXPECT_EQ(files, 1U);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(read_file((dir / "missing").string()), Error);
}

TEST(Config, ParseAndResolve) {
    const auto c = parse_config(
        "[moduli]\nlist = 65521, 65519, 65497, 65479\n[policy]\ntau = M/8\nmode = floor_div\n"
        "[run]\nseed = 7\nbaselines = binary64\n[workload]\nlengths = 16, 32\n");
    EXPECT_EQ(c.seed, 7U);
    EXPECT_EQ(c.lengths, (std::vector<std::size_t>{16, 32}));
    const auto r = resolve(c);
    EXPECT_EQ(r.moduli->size(), 4U);
    EXPECT_EQ(r.policy.tau, r.moduli->composite() / 8);
    EXPECT_EQ(r.policy.mode, RoundingMode::FloorDiv);
    EXPECT_EQ(r.policy.target_bits, 31U);
}

TEST(Config, Rejections) {
    EXPECT_THROW(parse_config("[nope]\na = 1\n"), Error);
    EXPECT_THROW(parse_config("[run]\ncolour = red\n"), Error);
    auto expect_config_error = [](const std::string& text) {
        try {
            resolve(parse_config(text));
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ConfigError) << text;
        }
    };
    expect_config_error("[policy]\ntau = M/2\n");
    expect_config_error("[moduli]\nlist = 6, 9\n");
    expect_config_error("[policy]\ntarget_bits = 130\n");
    expect_config_error("[run]\nbaselines = binary16\n");
}

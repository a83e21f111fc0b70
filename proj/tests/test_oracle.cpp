#include <cmath>

#include <gtest/gtest.h>

#include "hrfna/oracle.hpp"
#include "hrfna/workloads.hpp"

using namespace hrfna;
using oracle::Rational;

namespace {

Rational q(long n, long d = 1) {
    Rational r(n, d);
    r.canonicalize();
    return r;
}

}  // namespace

TEST(OracleParse, Forms) {
    EXPECT_EQ(oracle::parse_rational("-0.375"), q(-3, 8));
    EXPECT_EQ(oracle::parse_rational("1.5e-3"), q(3, 2000));
    EXPECT_EQ(oracle::parse_rational("3*2^-7"), q(3, 128));
    EXPECT_EQ(oracle::parse_rational("2^-7"), q(1, 128));
    EXPECT_EQ(oracle::parse_rational("1/6"), q(1, 6));
    EXPECT_THROW(oracle::parse_rational("x"), ParseError);
}

TEST(OracleParse, DoubleIsExact) {
    EXPECT_EQ(oracle::to_rational(0.3), Rational(mpz_class("5404319552844595"), mpz_class("18014398509481984")));
    EXPECT_EQ(oracle::to_double(q(1, 3)), 1.0 / 3.0);
}

TEST(ExactDot, SmallExample) {
    const std::vector<double> x = {1.5, -2.0, 0.25};
    const std::vector<double> y = {4.0, 0.5, -8.0};
    EXPECT_EQ(oracle::exact_dot(std::span<const double>(x), std::span<const double>(y)), q(3));
}

TEST(ExactMatmul, TwoByTwo) {
    const std::vector<double> a = {1, 2, 3, 4};
    const std::vector<double> b = {0.5, -1, 2, 0.25};
    const auto c = oracle::exact_matmul(a, 2, 2, b, 2, 2);
    EXPECT_EQ(c[0], q(9, 2));
    EXPECT_EQ(c[1], q(-1, 2));
    EXPECT_EQ(c[2], q(19, 2));
    EXPECT_EQ(c[3], q(-2));
}

TEST(FloatBaselines, CancellationLosesInBinary32) {
    const std::vector<double> x = {1.0, std::ldexp(1.0, -30), -1.0};
    const std::vector<double> y = {1.0, 1.0, 1.0};
    EXPECT_EQ(oracle::binary32_dot(x, y), 0.0F);
    EXPECT_EQ(oracle::binary64_dot(x, y), std::ldexp(1.0, -30));
}

TEST(Bfp, QuantizeSharesLargestExponent) {
    const std::vector<double> xs = {1.0, 0.75, -std::ldexp(1.0, -30)};
    const auto blk = oracle::bfp_quantize(xs, 24);
    EXPECT_EQ(blk.shared_exponent, 1);
    EXPECT_EQ(blk.q[0], 1 << 22);
    EXPECT_EQ(blk.q[1], 3 << 20);
    EXPECT_EQ(blk.q[2], 0);
    EXPECT_EQ(oracle::bfp_value(blk, 1, 24), q(3, 4));
}

TEST(Bfp, AccumulatorTruncatesTowardMinusInfinity) {
    oracle::BfpAccumulator acc(4);
    acc.add(mpz_class(15), 0);
    acc.add(mpz_class(1), 0);
    EXPECT_EQ(acc.value(), q(16));
    acc.add(mpz_class(-1), 0);
    EXPECT_EQ(acc.value(), q(15));
    acc.add(mpz_class(2), 0);  // 17 keeps four bits: floor(17/2) * 2
    EXPECT_EQ(acc.value(), q(16));
    oracle::BfpAccumulator neg(2);
    neg.add(mpz_class(-5), 0);  // floor(-5/2) * 2 = -6
    EXPECT_EQ(neg.value(), q(-6));
}

TEST(Bfp, ExactOnRepresentableSmallBlocks) {
    const std::vector<double> x = {1.0, 2.0, -3.0, 4.0};
    const std::vector<double> y = {0.5, 0.5, 0.5, 0.5};
    oracle::BfpConfig cfg;
    cfg.accumulator_bits = 53;
    EXPECT_EQ(oracle::bfp_dot(x, y, cfg), q(2));
}

TEST(Bfp, ConfigValidation) {
    oracle::BfpConfig cfg;
    cfg.block_size = 0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.mantissa_bits = 60;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(Metrics, RmsAndRelative) {
    const std::vector<Rational> exact = {q(1), q(-2), q(2)};
    const std::vector<Rational> approx = {q(2), q(-2), q(0)};
    const auto m = oracle::rms_error(approx, exact);
    EXPECT_DOUBLE_EQ(m.rms, std::sqrt(5.0 / 3.0));
    EXPECT_DOUBLE_EQ(m.max_abs, 2.0);
    EXPECT_DOUBLE_EQ(m.max_rel, 1.0);
    EXPECT_DOUBLE_EQ(m.rel_rms, std::sqrt(5.0 / 9.0));
    EXPECT_EQ(m.n, 3U);
}

TEST(Metrics, ZeroExactWithError) {
    const std::vector<Rational> exact = {q(0)};
    const std::vector<Rational> approx = {q(1)};
    EXPECT_TRUE(std::isinf(oracle::rms_error(approx, exact).max_rel));
}

// For y' = -lambda*y one RK4 step multiplies by R(z) = 1 + z + z^2/2 + z^3/6 + z^4/24, z = -lambda*h.
TEST(HighPrecRk4, LinearDecayMatchesClosedForm) {
    OdeProblem p;
    p.rhs = RhsKind::LinearDecay;
    p.lambda = "1";
    p.y0 = "1";
    p.h = "2^-4";
    p.steps = 64;
    p.checkpoint_every = 16;
    const auto ref = oracle::highprec_rk4(p, 512);
    const Rational z = q(-1, 16);
    const Rational r = 1 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24;
    Rational y = 1;
    std::size_t idx = 0;
    const Rational tol(mpz_class(1), mpz_class(1) << 480);
    for (std::uint64_t n = 1; n <= p.steps; ++n) {
        y = Rational(y * r);
        if (n % 16 == 0) {
            ASSERT_LT(idx, ref.size());
            EXPECT_EQ(ref[idx].step, n);
            const Rational d = abs(ref[idx].value - y);
            EXPECT_LE(d, tol);
            ++idx;
        }
    }
    EXPECT_EQ(idx, ref.size());
}

TEST(HighPrecRk4, LogisticApproachesOne) {
    OdeProblem p;
    p.steps = 5000;
    p.checkpoint_every = 5000;
    const auto ref = oracle::highprec_rk4(p, 128);
    ASSERT_EQ(ref.size(), 1U);
    const double y = oracle::to_double(ref[0].value);
    EXPECT_NEAR(y, 1.0 / (1.0 + std::exp(-5000.0 / 128.0)), 1e-12);
}

TEST(FloatRk4, Binary64TracksReference) {
    OdeProblem p;
    p.steps = 2000;
    p.checkpoint_every = 500;
    const auto ref = oracle::highprec_rk4(p, 256);
    const auto f64 = oracle::float_rk4<double>(p);
    const auto f32 = oracle::float_rk4<float>(p);
    ASSERT_EQ(f64.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double r = oracle::to_double(ref[i].value);
        EXPECT_NEAR(f64[i], r, 1e-13);
        EXPECT_NEAR(f32[i], r, 1e-4);
    }
}

TEST(Workloads, StreamsAreDeterministicAndDistinct) {
    EXPECT_EQ(generate(Distribution::Uniform, 16, 5, 0), generate(Distribution::Uniform, 16, 5, 0));
    EXPECT_NE(generate(Distribution::Uniform, 16, 5, 0), generate(Distribution::Uniform, 16, 5, 1));
    EXPECT_NE(generate(Distribution::Uniform, 16, 5, 0), generate(Distribution::Uniform, 16, 6, 0));
}

TEST(Workloads, DistributionSupports) {
    for (const double v : generate(Distribution::Uniform, 10000, 1, 0)) {
        EXPECT_GE(v, -1.0);
        EXPECT_LT(v, 1.0);
        EXPECT_EQ(std::ldexp(v, 24), std::trunc(std::ldexp(v, 24)));
    }
    for (const double v : generate(Distribution::LogUniform, 10000, 1, 0)) {
        const double a = std::fabs(v);
        EXPECT_GE(a, std::ldexp(1.0, -20));
        EXPECT_LT(a, std::ldexp(1.0, 20));
        int e = 0;
        const double m = std::frexp(a, &e);
        EXPECT_EQ(std::ldexp(m, 24), std::trunc(std::ldexp(m, 24)));
    }
}

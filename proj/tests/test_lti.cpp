#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "hmg/lti.hpp"
#include "hmg/subgrid.hpp"
#include "test_support.hpp"

using namespace hmg;
using hmg::testing::Rng;

namespace {

void expect_coeffs(const Polynomial& p, const std::vector<double>& expected, double tol = 1e-12) {
    ASSERT_EQ(p.coeffs().size(), expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(p[k], expected[k], tol) << "k=" << k;
}

/// Random stable transfer function, degree 1..max_deg, poles with |p| in [pmin, pmax].
RationalTF random_stable_tf(Rng& rng, int max_deg, int rel_deg_min, double pmin = 0.2, double pmax = 10.0) {
    const int n = rng.integer(std::max(1, rel_deg_min), max_deg);
    Polynomial den({1.0});
    int placed = 0;
    while (placed < n) {
        if (n - placed >= 2 && rng.uniform(0, 1) < 0.4) {
            const double mag = rng.log_uniform(pmin, pmax);
            const double ang = rng.uniform(0.1, 1.3);  // away from the imaginary axis
            const double re = -mag * std::cos(ang);
            den = den * Polynomial({mag * mag, -2.0 * re, 1.0});
            placed += 2;
        } else {
            den = den * Polynomial({rng.log_uniform(pmin, pmax), 1.0});
            placed += 1;
        }
    }
    const int m = rng.integer(0, n - rel_deg_min);
    std::vector<double> num(static_cast<std::size_t>(m + 1));
    for (auto& c : num) c = rng.uniform(-2.0, 2.0);
    num[0] = (rng.uniform(0, 1) < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 2.0) * den[0];
    num.back() = (num.back() < 0 ? -1.0 : 1.0) * std::max(0.3, std::abs(num.back()));
    return RationalTF(Polynomial(num), den);
}

}  // namespace

TEST(Polynomial, TrimsNegligibleLeadingCoefficients) {
    EXPECT_EQ(Polynomial({1.0, 2.0, 0.0}).degree(), 1u);
    EXPECT_EQ(Polynomial({1.0, 1e-13}).degree(), 0u);
    EXPECT_EQ(Polynomial({0.0, 0.0}).degree(), 0u);
    EXPECT_TRUE(Polynomial({0.0, 0.0}).is_zero());
    EXPECT_THROW(Polynomial(std::vector<double>{}), Error);
}

TEST(Polynomial, CancellationInSumsIsTrimmed) {
    const Polynomial a({0.1, 0.3});
    const Polynomial b({0.2, -0.1 - 0.2});
    EXPECT_EQ((a + b).degree(), 0u);
    EXPECT_TRUE((a - a).is_zero());
}

TEST(Polynomial, ProductsKeepSmallButGenuineLeadingTerms) {
    // Roots at -1e-4 and -1e5: the leading coefficient is 1e-9 of the largest.
    const Polynomial p = Polynomial({1e-4, 1.0}) * Polynomial({1e5, 1.0});
    EXPECT_EQ(p.degree(), 2u);
    EXPECT_DOUBLE_EQ(p.leading(), 1.0);
}

TEST(PolyMul, BinomialSquare) { expect_coeffs(poly_mul(Polynomial({1, 1}), Polynomial({1, 1})), {1, 2, 1}); }

TEST(PolyMul, ZeroAnnihilates) { EXPECT_TRUE(poly_mul(Polynomial({0}), Polynomial({1, 1})).is_zero()); }

TEST(PolyMul, GovernorTimesChest) {
    expect_coeffs(poly_mul(Polynomial({1, 0.1}), Polynomial({1, 0.2})), {1, 0.3, 0.02}, 1e-15);
}

TEST(PolyDivide, ExactAndRemainder) {
    const auto d = poly_divide(Polynomial({-1, 0, 1}), Polynomial({1, 1}));
    expect_coeffs(d.quotient, {-1, 1});
    EXPECT_NEAR(d.remainder.max_abs(), 0.0, 1e-15);
    const auto r = poly_divide(Polynomial({3, 0, 1}), Polynomial({1, 1}));
    EXPECT_NEAR(r.remainder[0], 4.0, 1e-14);
}

TEST(TfSeries, FirstOrderCascade) {
    const RationalTF f = tf_series(RationalTF({1}, {1, 1}), RationalTF({1}, {2, 1}));
    expect_coeffs(f.num(), {1});
    expect_coeffs(f.den(), {2, 3, 1});
}

TEST(TfSeries, IdentityElement) {
    const RationalTF f({1, 2}, {3, 4, 5});
    EXPECT_TRUE(tf_approx_equal(tf_series(RationalTF::gain(1.0), f), f, 1e-15));
}

TEST(TfSeries, GovernorTurbineChain) {
    SubgridSpec s = hmg::testing::table_ac();
    const RationalTF ty = tf_series(governor_tf(s), turbine_tf(s));
    // Independent oracle: the factored form evaluated directly.
    for (std::complex<double> z : {std::complex<double>(0.3, 1.1), {0.0, 5.0}, {-0.5, 0.2}}) {
        const auto expected = (2.1 * z + 1.0) / ((0.1 * z + 1.0) * (0.2 * z + 1.0) * (7.0 * z + 1.0));
        EXPECT_LT(std::abs(tf_eval(ty, z) - expected), 1e-12 * std::abs(expected));
    }
    EXPECT_EQ(ty.num().degree(), 1u);
    EXPECT_EQ(ty.den().degree(), 3u);
}

TEST(TfAdd, ZeroIsNeutral) {
    const RationalTF f({1}, {1, 1});
    EXPECT_TRUE(tf_approx_equal(tf_add(f, RationalTF::gain(0.0)), f, 1e-15));
}

TEST(TfAdd, SameDenominator) {
    const RationalTF f({1}, {1, 1});
    const RationalTF g = tf_add(f, f);
    expect_coeffs(g.num(), {2});
    expect_coeffs(g.den(), {1, 1});
}

TEST(TfAdd, IntegratorPlusOne) {
    const RationalTF g = tf_add(RationalTF::integrator(), RationalTF::gain(1.0));
    expect_coeffs(g.num(), {1, 1});
    expect_coeffs(g.den(), {0, 1});
}

TEST(RationalTF, NormalizesToMonicDenominator) {
    const RationalTF f({2, 4}, {4, 2});
    EXPECT_DOUBLE_EQ(f.den().leading(), 1.0);
    expect_coeffs(f.num(), {1, 2});
    EXPECT_THROW(RationalTF({1}, {0}), Error);
}

TEST(TfEval, DcGain) { EXPECT_NEAR(std::abs(tf_eval(RationalTF({1}, {1, 1}), 0.0) - 1.0), 0.0, 1e-15); }

TEST(TfEval, ConcatenatorLimits) {
    const double w0 = 1e-3 * M_PI;
    const RationalTF t({25.5 * w0, 1}, {w0, 1});
    EXPECT_NEAR(std::abs(tf_eval(t, {0.0, 1e3})), 1.0, 1e-4);
    EXPECT_NEAR(std::abs(tf_eval(t, {0.0, 1e-9})), 25.5, 1e-4);
}

TEST(TfEval, PoleRaises) {
    try {
        tf_eval(RationalTF({1}, {1, 1}), -1.0);
        FAIL() << "expected EvalAtPole";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EvalAtPole);
    }
}

TEST(TfToStateSpace, FirstOrderLag) {
    const StateSpace ss = tf_to_statespace(RationalTF({1}, {1, 1}));
    ASSERT_EQ(ss.order(), 1);
    EXPECT_DOUBLE_EQ(ss.A(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(ss.B(0), 1.0);
    EXPECT_DOUBLE_EQ(ss.C(0), 1.0);
    EXPECT_DOUBLE_EQ(ss.D, 0.0);
}

TEST(TfToStateSpace, BiproperLeadLag) {
    // (s+2)/(s+1) = 1 + 1/(s+1)
    const StateSpace ss = tf_to_statespace(RationalTF({2, 1}, {1, 1}));
    EXPECT_DOUBLE_EQ(ss.D, 1.0);
    EXPECT_DOUBLE_EQ(ss.A(0, 0), -1.0);
    EXPECT_DOUBLE_EQ((ss.C * ss.B)(0), 1.0);
}

TEST(TfToStateSpace, Differentiator) {
    // s/(s+1) = 1 - 1/(s+1)
    const StateSpace ss = tf_to_statespace(RationalTF({0, 1}, {1, 1}));
    EXPECT_DOUBLE_EQ(ss.D, 1.0);
    EXPECT_DOUBLE_EQ((ss.C * ss.B)(0), -1.0);
}

TEST(TfToStateSpace, ImproperRejected) {
    try {
        tf_to_statespace(RationalTF({0, 0, 1}, {1, 1}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ImproperTF);
    }
}

TEST(StepRk4, PureIntegrator) {
    StateSpace ss{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1), Eigen::RowVectorXd::Ones(1), 0.0};
    EXPECT_NEAR(step_rk4(ss, Eigen::VectorXd::Zero(1), 1.0, 0.01)(0), 0.01, 1e-15);
}

TEST(StepRk4, DecayMatchesExponential) {
    StateSpace ss{-Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), Eigen::RowVectorXd::Ones(1), 0.0};
    EXPECT_NEAR(step_rk4(ss, Eigen::VectorXd::Ones(1), 0.0, 0.1)(0), std::exp(-0.1), 1e-6);
}

TEST(StepRk4, ZeroStaysZero) {
    const StateSpace ss = tf_to_statespace(RationalTF({1, 2}, {3, 2, 1}));
    EXPECT_EQ(step_rk4(ss, ss.zero_state(), 0.0, 0.1).norm(), 0.0);
    EXPECT_THROW(step_rk4(ss, ss.zero_state(), 0.0, 0.0), Error);
}

TEST(IvtRateLimit, AcBranch) {
    EXPECT_NEAR(ivt_rate_limit(build_ac_open_loop_tf(hmg::testing::table_ac())), -0.25, 1e-12);
}

TEST(IvtRateLimit, StorageBranch) {
    EXPECT_NEAR(ivt_rate_limit(build_ds_open_loop_tf(hmg::testing::table_ds())), -1.0 / 15.0, 1e-12);
}

TEST(IvtRateLimit, RelativeDegreeTwo) { EXPECT_EQ(ivt_rate_limit(RationalTF({1}, {1, 0, 1})), 0.0); }

TEST(IvtRateLimit, BiproperIsUnbounded) {
    try {
        ivt_rate_limit(RationalTF({2, 1}, {1, 1}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Unbounded);
    }
}

TEST(FvtLimit, UnitStep) { EXPECT_NEAR(fvt_limit(RationalTF::integrator()), 1.0, 1e-12); }

TEST(FvtLimit, ConcatenatorDcGain) {
    const double w0 = 1e-3 * M_PI;
    const RationalTF t({25.5 * w0, 1}, {w0, 1});
    EXPECT_NEAR(fvt_limit(tf_series(t, RationalTF::integrator())), 25.5, 1e-9);
}

TEST(FvtLimit, UnstablePoleRejected) {
    try {
        fvt_limit(RationalTF({1}, {-1, 1}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::FvtInvalid);
    }
}

TEST(FvtLimit, DoubleIntegratorRejected) { EXPECT_THROW(fvt_limit(RationalTF({1}, {0, 0, 1})), Error); }

TEST(FvtLimit, CancelsOriginZero) {
    // s/(s (s+2)) behaves like 1/(s+2): the step's limit is zero.
    EXPECT_NEAR(fvt_limit(RationalTF({0, 1}, {0, 2, 1})), 0.0, 1e-12);
    const RationalTF c = cancel_origin(RationalTF({0, 1}, {0, 2, 1}));
    EXPECT_EQ(c.den().degree(), 1u);
}

TEST(ModalRealization, MatchesTransferFunction) {
    const RationalTF f({3, 1, 2}, Polynomial({2, 1}) * Polynomial({5, 2, 1}) * Polynomial({1e-3, 1}));
    const StateSpace ss = tf_to_modal_statespace(f);
    for (std::complex<double> z : {std::complex<double>(0.1, 0.7), {0.0, 30.0}, {2.0, -1.0}})
        EXPECT_LT(std::abs(ss_eval(ss, z) - tf_eval(f, z)), 1e-10 * std::abs(tf_eval(f, z)));
}

TEST(ModalRealization, RepeatedPoleRejected) {
    EXPECT_THROW(tf_to_modal_statespace(RationalTF({1}, {1, 2, 1})), Error);
}

// ---- properties ---------------------------------------------------------

TEST(LtiProperty, RealizationRoundTrip) {
    Rng rng;
    for (int trial = 0; trial < 200; ++trial) {
        const RationalTF f = random_stable_tf(rng, 5, 0);
        const StateSpace ss = tf_to_statespace(f);
        ASSERT_EQ(static_cast<std::size_t>(ss.order()), f.den().degree());
        for (int k = 0; k < 10; ++k) {
            const auto z = rng.complex_point();
            const auto expected = tf_eval(f, z);
            EXPECT_LT(std::abs(ss_eval(ss, z) - expected), 1e-8 * std::max(1e-12, std::abs(expected)))
                << "trial " << trial;
        }
    }
}

TEST(LtiProperty, Rk4ConvergesAtFourthOrder) {
    Rng rng;
    for (int trial = 0; trial < 50; ++trial) {
        const double a = rng.uniform(0.5, 5.0);
        StateSpace ss{Eigen::MatrixXd::Constant(1, 1, -a), Eigen::VectorXd::Zero(1), Eigen::RowVectorXd::Ones(1), 0.0};
        const auto error = [&](int n) {
            const double h = 1.0 / n;
            Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
            for (int i = 0; i < n; ++i) x = step_rk4(ss, x, 0.0, h);
            return std::abs(x(0) - std::exp(-a));
        };
        const double ratio = error(20) / error(40);
        EXPECT_GE(ratio, 8.0) << "a=" << a;
        EXPECT_LE(ratio, 32.0) << "a=" << a;
    }
}

TEST(LtiProperty, IvtMatchesInitialSlope) {
    Rng rng;
    for (int trial = 0; trial < 100; ++trial) {
        const RationalTF f = random_stable_tf(rng, 5, 1);
        if (f.den().degree() != f.num().degree() + 1) continue;
        const double h = 1e-5;
        const auto y = step_response(f, 1.0, h, 1);
        const double slope = (y[1] - y[0]) / h;
        const double ivt = ivt_rate_limit(f);
        EXPECT_NEAR(slope, ivt, 0.02 * std::abs(ivt)) << "trial " << trial;
    }
}

TEST(LtiProperty, FvtMatchesSettledStepResponse) {
    Rng rng;
    for (int trial = 0; trial < 30; ++trial) {
        const RationalTF f = random_stable_tf(rng, 4, 0, 0.5, 8.0);
        double slowest = 1e300;
        for (auto p : roots(f.den())) slowest = std::min(slowest, std::abs(p));
        const double h = 0.01;
        const auto steps = static_cast<std::size_t>(std::ceil(50.0 / slowest / h));
        const double y_end = step_response(f, 1.0, h, steps).back();
        const double fvt = fvt_limit(tf_series(f, RationalTF::integrator()));
        EXPECT_NEAR(y_end, fvt, 0.005 * std::abs(fvt)) << "trial " << trial;
    }
}

TEST(LtiProperty, SeriesAndSumAreAssociativeAndCommutative) {
    Rng rng;
    for (int trial = 0; trial < 100; ++trial) {
        const RationalTF a = random_stable_tf(rng, 3, 0);
        const RationalTF b = random_stable_tf(rng, 3, 0);
        const RationalTF c = random_stable_tf(rng, 3, 0);
        EXPECT_TRUE(tf_approx_equal(tf_series(a, b), tf_series(b, a), 1e-10));
        EXPECT_TRUE(tf_approx_equal(tf_series(a, tf_series(b, c)), tf_series(tf_series(a, b), c), 1e-10));
        EXPECT_TRUE(tf_approx_equal(tf_add(a, b), tf_add(b, a), 1e-10));
        EXPECT_TRUE(tf_approx_equal(tf_add(a, tf_add(b, c)), tf_add(tf_add(a, b), c), 1e-10));
    }
}

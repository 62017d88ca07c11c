#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "knnids/calibrate.hpp"
#include "knnids/error.hpp"
#include "oracles.hpp"

using namespace knnids;
using calibrate::LambertBranch;

TEST(LebesgueConstant, KnownVolumes) {
    EXPECT_DOUBLE_EQ(calibrate::lebesgue_constant(1), 2.0);
    EXPECT_NEAR(calibrate::lebesgue_constant(2), std::numbers::pi, 1e-15);
    EXPECT_NEAR(calibrate::lebesgue_constant(3), 4.0 * std::numbers::pi / 3.0, 1e-14);
    for (std::size_t d = 1; d <= 20; ++d) {
        EXPECT_NEAR(calibrate::lebesgue_constant(d), oracle::ball_volume(d), 1e-13 * oracle::ball_volume(d)) << d;
    }
    EXPECT_THROW(calibrate::lebesgue_constant(0), OutOfDomain);
}

TEST(LambertW, SpecialValues) {
    EXPECT_EQ(calibrate::lambert_w(0.0, LambertBranch::principal), 0.0);
    EXPECT_NEAR(calibrate::lambert_w(std::numbers::e, LambertBranch::principal), 1.0, 1e-15);
    EXPECT_NEAR(calibrate::lambert_w(-1.0 / std::numbers::e, LambertBranch::principal), -1.0, 1e-7);
    EXPECT_NEAR(calibrate::lambert_w(-1.0 / std::numbers::e, LambertBranch::minus_one), -1.0, 1e-7);
    EXPECT_NEAR(calibrate::lambert_w(-0.1, LambertBranch::minus_one), -3.577152063957297, 1e-12);
    EXPECT_NEAR(calibrate::lambert_w(-0.1, LambertBranch::principal), -0.11183255915896297, 1e-14);
}

TEST(LambertW, DomainErrors) {
    EXPECT_THROW(calibrate::lambert_w(-0.5, LambertBranch::principal), OutOfDomain);
    EXPECT_THROW(calibrate::lambert_w(0.1, LambertBranch::minus_one), OutOfDomain);
    EXPECT_THROW(calibrate::lambert_w(0.0, LambertBranch::minus_one), OutOfDomain);
    EXPECT_THROW(calibrate::lambert_w(std::nan(""), LambertBranch::principal), OutOfDomain);
}

TEST(LambertW, AgreesWithBisection) {
    for (double x : {-0.3678, -0.3, -0.2, -0.05, -1e-3, -1e-8, 1e-6, 0.5, 3.0, 50.0, 1e5, 1e200}) {
        EXPECT_NEAR(calibrate::lambert_w(x, LambertBranch::principal), oracle::lambert_w_bisect(x, true),
                    1e-12 * std::max(1.0, std::abs(oracle::lambert_w_bisect(x, true))))
            << x;
    }
    for (double x : {-0.3678, -0.3, -0.2, -0.05, -1e-3, -1e-8, -1e-100}) {
        const double want = oracle::lambert_w_bisect(x, false);
        EXPECT_NEAR(calibrate::lambert_w(x, LambertBranch::minus_one), want, 1e-12 * std::abs(want)) << x;
    }
}

TEST(LambertWProperty, RoundTrip) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < 2000; ++c) {
        // w spread over both branches
        const double w = c % 2 ? -1.0 - 40.0 * u(rng) : -1.0 + 60.0 * u(rng);
        const double x = w * std::exp(w);
        const auto branch = w <= -1.0 ? LambertBranch::minus_one : LambertBranch::principal;
        const double got = calibrate::lambert_w(x, branch);
        ASSERT_NEAR(got * std::exp(got), x, 1e-12 * std::abs(x) + 1e-300) << "w=" << w;
    }
}

TEST(SolveOmega0, MatchesBisectionRootOfTheMomentEquation) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int seen_principal = 0, seen_lower = 0;
    for (int c = 0; c < 300; ++c) {
        const std::size_t d = 1 + rng() % 3;
        const double lm = 0.05 + 0.6 * u(rng);
        const double phi = 0.05 + 8.0 * u(rng);
        calibrate::Omega0Solution sol;
        try {
            sol = calibrate::solve_omega0(lm, phi, d);
        } catch (const NoPositiveRoot&) {
            EXPECT_LE(oracle::omega0_bisect(lm, phi, d), 0.0);
            continue;
        }
        const double want = oracle::omega0_bisect(lm, phi, d);
        EXPECT_NEAR(sol.omega0, want, 1e-8 * std::max(1.0, std::abs(want)));
        EXPECT_EQ(sol.trivial_omega0, sol.v_d);
        EXPECT_NE(sol.omega0, sol.v_d);
        const double theta = sol.theta;
        const double integral =
            oracle::simpson([&](double y) { return theta * std::exp((sol.omega0 - sol.v_d) * y); }, 0.0, phi);
        EXPECT_NEAR(integral, 1.0, 1e-8);
        if (phi * theta < 1.0) {
            EXPECT_EQ(sol.branch, LambertBranch::minus_one);
            ++seen_lower;
        } else {
            EXPECT_EQ(sol.branch, LambertBranch::principal);
            ++seen_principal;
        }
    }
    EXPECT_GT(seen_principal, 0);
    EXPECT_GT(seen_lower, 0);
}

TEST(SolveOmega0, Errors) {
    EXPECT_THROW(calibrate::solve_omega0(0.3, 0.0, 2), NoPositiveRoot);
    EXPECT_THROW(calibrate::solve_omega0(0.3, -1.0, 2), NoPositiveRoot);
    // d = 1, LM = 0: theta = 2, phi = 1/2 puts both branches on the trivial root
    EXPECT_THROW(calibrate::solve_omega0(0.0, 0.5, 1), DegenerateTrivialOnly);
}

TEST(MomentIntegral, LowerLimitChangesTheResidualBySmallMass) {
    const auto sol = calibrate::solve_omega0(0.1, 3.0, 2);
    const double lm_d = 0.01;
    EXPECT_NEAR(calibrate::moment_integral(sol.omega0, sol.v_d, lm_d, 3.0, 0.0), 1.0, 1e-10);
    const double full = calibrate::moment_integral(sol.omega0, sol.v_d, lm_d, 3.0, -lm_d);
    const double extra = oracle::simpson(
        [&](double y) { return sol.theta * std::exp((sol.omega0 - sol.v_d) * y); }, -lm_d, 0.0, 2000);
    EXPECT_NEAR(full - 1.0, extra, 1e-10);
}

namespace {

detector::TrainedModel synthetic_model(double lm, double phi, std::size_t d) {
    detector::TrainedModel m;
    m.baseline_LM = lm;
    m.evidence_bound_phi = phi;
    m.d = d;
    return m;
}

}  // namespace

TEST(ThresholdForFar, ClosedForm) {
    const auto m = synthetic_model(0.2, 2.5, 2);
    const auto cal = calibrate::threshold_for_far(m, 0.05);
    EXPECT_DOUBLE_EQ(cal.h, -std::log(0.05) / cal.omega0);
    EXPECT_EQ(cal.beta, 0.05);
    EXPECT_EQ(cal.phi, 2.5);
    EXPECT_THROW(calibrate::threshold_for_far(m, 0.0), OutOfDomain);
    EXPECT_THROW(calibrate::threshold_for_far(m, 1.0), OutOfDomain);
    EXPECT_THROW(calibrate::threshold_for_far(m, -0.1), OutOfDomain);
}

TEST(ThresholdForFarProperty, ThresholdDecreasesAsBetaGrows) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 1000) {
        const auto m = synthetic_model(0.05 + 0.5 * u(rng), 0.1 + 5.0 * u(rng), 1 + rng() % 3);
        double b1 = 0.001 + 0.998 * u(rng), b2 = 0.001 + 0.998 * u(rng);
        if (b1 == b2) continue;
        if (b1 > b2) std::swap(b1, b2);
        try {
            const auto h1 = calibrate::threshold_for_far(m, b1).h;
            const auto h2 = calibrate::threshold_for_far(m, b2).h;
            ASSERT_GT(h1, h2);
            ASSERT_GT(h2, 0.0);
        } catch (const NoPositiveRoot&) {
            continue;
        }
        ++checked;
    }
}

TEST(ClosedFormRegime, OnlyUnitNeighborsAndExponent) {
    EXPECT_TRUE(calibrate::in_closed_form_regime({1, 1, 1.0, 0.05, 1.0}));
    EXPECT_FALSE(calibrate::in_closed_form_regime({2, 1, 1.0, 0.05, 1.0}));
    EXPECT_FALSE(calibrate::in_closed_form_regime({1, 1, 0.5, 0.05, 1.0}));
}

TEST(MomentCondition, ZeroRateGivesOne) {
    std::mt19937_64 rng(1);
    std::vector<core::DataInstance> xs;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) xs.push_back({{u(rng), u(rng)}, 0, ""});
    const auto model = detector::fit(xs, {1, 1, 1.0, 0.05, 1.0}, 1.0 / 3.0, 1);
    const auto sampler = [](std::mt19937_64& r) {
        std::uniform_real_distribution<double> v(0.0, 1.0);
        return core::DataInstance{{v(r), v(r)}, 0, ""};
    };
    EXPECT_DOUBLE_EQ(calibrate::validate_moment_condition(model, 0.0, 100, 3, sampler), 1.0);
    EXPECT_EQ(calibrate::validate_moment_condition(model, 5.0, 50, 3, sampler),
              calibrate::validate_moment_condition(model, 5.0, 50, 3, sampler));
}

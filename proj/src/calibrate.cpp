#include "knnids/calibrate.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "knnids/error.hpp"

namespace knnids::calibrate {

namespace {

constexpr double kInvE = 0.36787944117144233;  // 1/e
constexpr int kMaxHalleySteps = 100;
constexpr double kVerifyTolerance = 1e-8;

// Series about the branch point in p = +-sqrt(2(ex + 1)).
double branch_point_series(double p) {
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
}

double initial_guess(double x, LambertBranch branch) {
    if (branch == LambertBranch::principal) {
        if (x < -0.32) return branch_point_series(std::sqrt(2.0 * (std::numbers::e * x + 1.0)));
        if (x < 3.0) {
            const double l = std::log1p(x);
            return l * (1.0 - std::log1p(l) / (2.0 + l));
        }
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        return l1 - l2 + l2 / l1;
    }
    if (x < -0.25) return branch_point_series(-std::sqrt(2.0 * (std::numbers::e * x + 1.0)));
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    return l1 - l2 + l2 / l1;
}

}  // namespace

double lebesgue_constant(std::size_t d) {
    if (d == 0) throw OutOfDomain("lebesgue_constant: d must be >= 1");
    const double half = static_cast<double>(d) / 2.0;
    return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

double lambert_w(double x, LambertBranch branch) {
    if (std::isnan(x)) throw OutOfDomain("lambert_w: NaN argument");
    if (x < -kInvE) {
        // Arguments computed as -z*e^{-z} with z ~ 1 can land an ulp or two below -1/e.
        if (-kInvE - x <= 8.0 * std::numeric_limits<double>::epsilon() * kInvE) return -1.0;
        throw OutOfDomain("lambert_w: argument " + std::to_string(x) + " below -1/e");
    }
    if (branch == LambertBranch::minus_one && x >= 0.0) {
        throw OutOfDomain("lambert_w: minus_one branch requires x < 0");
    }
    if (branch == LambertBranch::principal && x == 0.0) return 0.0;

    const double p2 = 2.0 * (std::numbers::e * x + 1.0);
    if (p2 < 1e-16) {
        const double p = std::sqrt(std::max(p2, 0.0));
        return branch_point_series(branch == LambertBranch::principal ? p : -p);
    }

    double w = initial_guess(x, branch);
    double best_w = w;
    double best_f = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int i = 0; i < kMaxHalleySteps; ++i) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        if (f == 0.0) return w;
        if (std::abs(f) < best_f) {
            best_f = std::abs(f);
            best_w = w;
            stalled = 0;
        } else if (++stalled >= 3) {
            // near the branch point the residual bottoms out at rounding level
            return best_w;
        }
        const double wp1 = w + 1.0;
        const double dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        if (!std::isfinite(dw)) return best_w;
        w -= dw;
        if (std::abs(dw) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(w))) {
            return w;
        }
    }
    throw CalibrationError("lambert_w: Halley iteration did not converge for x=" + std::to_string(x));
}

double moment_integral(double omega0, double v_d, double lm_pow_d, double phi, double lower) {
    const double theta = v_d * std::exp(-v_d * lm_pow_d);
    const double rate = omega0 - v_d;
    auto integrand = [&](double y) { return theta * std::exp(rate * y); };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lower, phi, 15, 1e-14, &err);
}

Omega0Solution solve_omega0(double baseline_LM, double phi, std::size_t d) {
    if (!(phi > 0.0) || !std::isfinite(phi)) {
        throw NoPositiveRoot("solve_omega0: evidence bound phi must be positive, got " + std::to_string(phi));
    }
    const double v = lebesgue_constant(d);
    const double lm_pow_d = std::pow(baseline_LM, static_cast<double>(d));
    const double theta = v * std::exp(-v * lm_pow_d);
    const double z = phi * theta;
    if (z == 1.0) {
        throw DegenerateTrivialOnly("solve_omega0: phi*theta == 1, both branches return the trivial root");
    }
    const double arg = -z * std::exp(-z);

    Omega0Solution sol;
    sol.v_d = v;
    sol.theta = theta;
    sol.phi = phi;
    sol.trivial_omega0 = v;

    // W(-z e^{-z}) = -z on exactly one branch (principal if z < 1); that
    // candidate maps to omega0 = v_d. The other branch carries the root.
    struct Candidate {
        LambertBranch branch;
        double w;
        double omega;
    };
    const Candidate cands[2] = {
        {LambertBranch::principal, 0.0, 0.0},
        {LambertBranch::minus_one, 0.0, 0.0},
    };
    bool found = false;
    for (Candidate c : cands) {
        c.w = lambert_w(arg, c.branch);
        c.omega = v - theta - c.w / phi;
        const bool trivial = std::abs(c.w + z) <= 1e-9 * std::max(1.0, z);
        if (trivial) continue;
        const double residual = std::abs(moment_integral(c.omega, v, lm_pow_d, phi, 0.0) - 1.0);
        if (residual > kVerifyTolerance) {
            throw CalibrationError("solve_omega0: candidate root on " +
                                   std::string(c.branch == LambertBranch::principal ? "principal" : "minus_one") +
                                   " branch fails the moment integral (residual " + std::to_string(residual) +
                                   ")");
        }
        if (found) {
            throw DegenerateTrivialOnly("solve_omega0: no branch returned the trivial root; phi*theta ~ 1");
        }
        found = true;
        sol.omega0 = c.omega;
        sol.branch = c.branch;
        sol.residual = residual;
    }
    if (!found) {
        throw DegenerateTrivialOnly("solve_omega0: both branches return the trivial root omega0 = v_d");
    }
    if (!(sol.omega0 > 0.0)) {
        throw NoPositiveRoot("solve_omega0: non-trivial root omega0=" + std::to_string(sol.omega0) +
                             " is not positive; training data too sparse for the closed form");
    }
    return sol;
}

Omega0Solution solve_omega0(const detector::TrainedModel& model) {
    return solve_omega0(model.baseline_LM, model.evidence_bound_phi, model.d);
}

Calibration threshold_for_far(const detector::TrainedModel& model, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw OutOfDomain("threshold_for_far: beta must lie in (0,1), got " + std::to_string(beta));
    }
    const auto sol = solve_omega0(model);
    return {beta, sol.v_d, sol.theta, sol.phi, sol.omega0, threshold_from(beta, sol.omega0)};
}

bool in_closed_form_regime(const detector::Hyperparams& p) noexcept {
    return p.k == 1 && p.s == 1 && p.gamma == 1.0;
}

double validate_moment_condition(const detector::TrainedModel& model, double omega0, std::size_t n_samples,
                                 std::uint64_t seed, const NominalSampler& sampler) {
    if (n_samples == 0) return 1.0;
    std::mt19937_64 rng(seed);
    std::vector<double> buf(model.d);
    double sum = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const auto raw = sampler(rng);
        core::normalize_into(raw.values, model.bounds, buf);
        const double D = detector::evidence(buf, model).D;
        sum += std::exp(omega0 * D);
    }
    return sum / static_cast<double>(n_samples);
}

}  // namespace knnids::calibrate

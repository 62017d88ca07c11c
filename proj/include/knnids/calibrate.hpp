#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

#include "knnids/core.hpp"
#include "knnids/detector.hpp"

namespace knnids::calibrate {

/// Volume of the d-dimensional unit ball, pi^{d/2} / Gamma(d/2 + 1).
double lebesgue_constant(std::size_t d);

enum class LambertBranch { principal, minus_one };

/// Solves w * e^w = x on the requested branch (principal: w >= -1,
/// minus_one: w <= -1) by Halley iteration from a branch-specific seed.
/// Throws OutOfDomain outside [-1/e, inf) resp. [-1/e, 0).
double lambert_w(double x, LambertBranch branch);

struct Omega0Solution {
    double v_d = 0.0;
    double theta = 0.0;
    double phi = 0.0;
    double omega0 = 0.0;
    LambertBranch branch = LambertBranch::principal;  // branch that produced omega0
    double trivial_omega0 = 0.0;                       // the rejected root, always v_d
    double residual = 0.0;                             // |integral - 1| at omega0
};

/// Non-trivial positive root of the moment condition in closed form:
///   omega0 = v_d - theta - W(-phi*theta*e^{-phi*theta}) / phi,
///   theta  = v_d * e^{-v_d * LM^d}.
/// Both Lambert-W branches are evaluated; the candidate equal to v_d is the
/// spurious root of e^{phi x} = a0 (x + theta) and is discarded. The survivor
/// must satisfy  theta * int_0^phi e^{(omega0 - v_d) y} dy = 1  by quadrature.
Omega0Solution solve_omega0(double baseline_LM, double phi, std::size_t d);
Omega0Solution solve_omega0(const detector::TrainedModel& model);

/// Residual of the defining integral, evaluated by adaptive Gauss-Kronrod
/// quadrature. lower = 0 gives the form the closed expression solves;
/// lower = -LM^d gives the full support of the nominal evidence density.
double moment_integral(double omega0, double v_d, double lm_pow_d, double phi, double lower);

struct Calibration {
    double beta = 0.0;
    double v_d = 0.0;
    double theta = 0.0;
    double phi = 0.0;
    double omega0 = 0.0;
    double h = 0.0;

    friend bool operator==(const Calibration&, const Calibration&) = default;
};

inline double threshold_from(double beta, double omega0) { return -std::log(beta) / omega0; }

/// h = -ln(beta) / omega0.
Calibration threshold_for_far(const detector::TrainedModel& model, double beta);

/// The closed form is derived for k = s = gamma = 1; other settings get an
/// approximate threshold.
bool in_closed_form_regime(const detector::Hyperparams& p) noexcept;

/// Draws one raw nominal observation.
using NominalSampler = std::function<core::DataInstance(std::mt19937_64&)>;

/// Monte Carlo estimate of E[exp(omega0 * D_t)] over fresh nominal samples.
double validate_moment_condition(const detector::TrainedModel& model, double omega0, std::size_t n_samples,
                                 std::uint64_t seed, const NominalSampler& sampler);

}  // namespace knnids::calibrate

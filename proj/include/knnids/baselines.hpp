#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "knnids/core.hpp"
#include "knnids/scenario.hpp"

namespace knnids::baselines {

/// Univariate Gaussian CUSUM run independently on every monitored dimension.
struct GaussianCusumSpec {
    std::vector<double> mu0, sigma0;  // nominal
    std::vector<double> mu1, sigma1;  // attack
    double h_g = 1.0;

    std::size_t dim() const noexcept { return mu0.size(); }
    /// Throws InvalidSpec unless sizes agree and sigmas are > 0.
    void validate() const;
};

/// log(f1(x) / f0(x)) for two normal densities.
double log_likelihood_ratio(double x, double mu0, double sigma0, double mu1, double sigma1);

struct GaussianCusumState {
    std::vector<double> s;  // one statistic per dimension
    core::Tick t = 0;
};

struct GcusumStep {
    GaussianCusumState state;
    bool alarmed = false;  // any dimension at or above h_g
};

/// Scalar update s' = max(s + LLR(x), 0).
double gcusum_update(double s, double x, double mu0, double sigma0, double mu1, double sigma1);

GcusumStep gcusum_step(GaussianCusumState state, std::span<const double> x, const GaussianCusumSpec& spec);

/// Time (1-based position in the stream) of the first alarm.
std::optional<core::Tick> run_gcusum(std::span<const core::DataInstance> stream, const GaussianCusumSpec& spec);

/// max_n s_n,t per tick; the alarm time for threshold h is the first index with path >= h.
std::vector<double> gcusum_path(std::span<const core::DataInstance> stream, const GaussianCusumSpec& spec);

/// Nominal parameters from the training sample moments; attack parameters from
/// the known attack (shifted mean and the added variance of the injected
/// uniform term) on target dimensions, nominal elsewhere.
GaussianCusumSpec informed_gcusum(std::span<const core::DataInstance> training, const streams::AttackSpec& attack,
                                  std::span<const double> nominal_means, double h_g);

/// First 1-based position whose total sum_n x_t^n reaches the threshold.
std::optional<core::Tick> data_filter(std::span<const core::DataInstance> stream, double threshold);

/// sum_n x_t^n per tick.
std::vector<double> total_rate_path(std::span<const core::DataInstance> stream);

}  // namespace knnids::baselines

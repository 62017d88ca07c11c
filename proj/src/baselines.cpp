#include "knnids/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "knnids/error.hpp"

namespace knnids::baselines {

void GaussianCusumSpec::validate() const {
    const auto d = mu0.size();
    if (d == 0 || sigma0.size() != d || mu1.size() != d || sigma1.size() != d) {
        throw InvalidSpec("gcusum: parameter vectors must be non-empty and of equal length");
    }
    for (std::size_t n = 0; n < d; ++n) {
        if (!(sigma0[n] > 0.0) || !(sigma1[n] > 0.0)) throw InvalidSpec("gcusum: sigmas must be > 0");
    }
    if (std::isnan(h_g)) throw InvalidSpec("gcusum: threshold is NaN");
}

double log_likelihood_ratio(double x, double mu0, double sigma0, double mu1, double sigma1) {
    const double z0 = (x - mu0) / sigma0;
    const double z1 = (x - mu1) / sigma1;
    return std::log(sigma0 / sigma1) + 0.5 * (z0 * z0 - z1 * z1);
}

double gcusum_update(double s, double x, double mu0, double sigma0, double mu1, double sigma1) {
    return std::max(s + log_likelihood_ratio(x, mu0, sigma0, mu1, sigma1), 0.0);
}

GcusumStep gcusum_step(GaussianCusumState state, std::span<const double> x, const GaussianCusumSpec& spec) {
    const auto d = spec.dim();
    if (x.size() != d) throw DimensionMismatch("gcusum: observation dimension differs from spec");
    if (state.s.size() != d) state.s.assign(d, 0.0);
    bool alarmed = false;
    for (std::size_t n = 0; n < d; ++n) {
        state.s[n] = gcusum_update(state.s[n], x[n], spec.mu0[n], spec.sigma0[n], spec.mu1[n], spec.sigma1[n]);
        alarmed = alarmed || state.s[n] >= spec.h_g;
    }
    ++state.t;
    return {std::move(state), alarmed};
}

std::optional<core::Tick> run_gcusum(std::span<const core::DataInstance> stream, const GaussianCusumSpec& spec) {
    spec.validate();
    GaussianCusumState state;
    for (const auto& x : stream) {
        auto r = gcusum_step(std::move(state), x.values, spec);
        state = std::move(r.state);
        if (r.alarmed) return state.t;
    }
    return std::nullopt;
}

std::vector<double> gcusum_path(std::span<const core::DataInstance> stream, const GaussianCusumSpec& spec) {
    spec.validate();
    std::vector<double> path;
    path.reserve(stream.size());
    GaussianCusumState state;
    for (const auto& x : stream) {
        state = gcusum_step(std::move(state), x.values, spec).state;
        path.push_back(*std::max_element(state.s.begin(), state.s.end()));
    }
    return path;
}

GaussianCusumSpec informed_gcusum(std::span<const core::DataInstance> training, const streams::AttackSpec& attack,
                                  std::span<const double> nominal_means, double h_g) {
    if (training.size() < 2) throw InsufficientData("gcusum: need at least 2 training instances");
    const auto d = training.front().dim();
    core::require_same_dim(training, d);
    if (nominal_means.size() != d) throw DimensionMismatch("gcusum: nominal mean vector has wrong dimension");

    GaussianCusumSpec spec;
    spec.h_g = h_g;
    spec.mu0.assign(d, 0.0);
    spec.sigma0.assign(d, 0.0);
    const double n_inv = 1.0 / static_cast<double>(training.size());
    for (const auto& x : training) {
        for (std::size_t n = 0; n < d; ++n) spec.mu0[n] += x.values[n] * n_inv;
    }
    for (const auto& x : training) {
        for (std::size_t n = 0; n < d; ++n) {
            const double e = x.values[n] - spec.mu0[n];
            spec.sigma0[n] += e * e;
        }
    }
    for (auto& v : spec.sigma0) v = std::sqrt(v / static_cast<double>(training.size() - 1));
    spec.mu1 = spec.mu0;
    spec.sigma1 = spec.sigma0;

    for (auto n : attack.target_dims) {
        if (n >= d) throw DimensionMismatch("gcusum: attack target outside the data dimension");
        // half-width of the injected uniform term
        const double w = attack.kind == streams::AttackKind::ddos_rate_increase
                             ? attack.magnitude * nominal_means[n]
                             : attack.magnitude * std::abs(nominal_means[n]);
        if (attack.kind == streams::AttackKind::ddos_rate_increase) spec.mu1[n] += w;
        spec.sigma1[n] = std::sqrt(spec.sigma0[n] * spec.sigma0[n] + w * w / 3.0);
    }
    spec.validate();
    return spec;
}

std::optional<core::Tick> data_filter(std::span<const core::DataInstance> stream, double threshold) {
    core::Tick t = 0;
    for (const auto& x : stream) {
        ++t;
        if (std::accumulate(x.values.begin(), x.values.end(), 0.0) >= threshold) return t;
    }
    return std::nullopt;
}

std::vector<double> total_rate_path(std::span<const core::DataInstance> stream) {
    std::vector<double> path;
    path.reserve(stream.size());
    for (const auto& x : stream) path.push_back(std::accumulate(x.values.begin(), x.values.end(), 0.0));
    return path;
}

}  // namespace knnids::baselines

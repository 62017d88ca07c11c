#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "knnids/core.hpp"

namespace knnids::streams {

struct UniformBox {
    std::vector<double> lo;
    std::vector<double> hi;
};

struct MixtureComponent {
    double weight = 0.0;
    std::vector<double> mean;
    std::vector<double> stddev;  // diagonal
};

struct GaussianMixture {
    std::vector<MixtureComponent> components;
};

/// Per-segment counts NB(r_n, p_n) drawn as Poisson(Gamma). With
/// shared_intensity the Gamma(r, 1) factor is common to all segments in a
/// tick (requires equal r), which correlates segments through traffic density
/// while leaving each marginal NB(r, p_n).
struct NegativeBinomialRates {
    std::vector<double> r;
    std::vector<double> p;
    bool shared_intensity = false;
};

/// Per-segment counts round(N(mean, stddev)) floored at zero.
struct GaussianRates {
    std::vector<double> mean;
    std::vector<double> stddev;
};

using Generator = std::variant<UniformBox, GaussianMixture, NegativeBinomialRates, GaussianRates>;

enum class AttackKind { fdi_uniform, ddos_rate_increase };

struct AttackSpec {
    AttackKind kind = AttackKind::fdi_uniform;
    std::vector<std::size_t> target_dims;
    core::Tick start = 1;  // inclusive, 1-based
    core::Tick end = 1;    // inclusive
    /// fdi_uniform: falsified value uniform within +-magnitude*|nominal| of the
    /// nominal value. ddos_rate_increase: extra count uniform on
    /// [0, 2*magnitude*mean_n], i.e. mean magnitude*mean_n.
    double magnitude = 0.0;

    core::Tick length() const noexcept { return end - start + 1; }
};

struct ScenarioSpec {
    Generator generator;
    std::size_t d = 0;
    core::Tick horizon = 1;
    std::optional<AttackSpec> attack;
    std::uint64_t seed = 0;
    std::string source_id = "sim";

    /// Throws InvalidSpec.
    void validate() const;
};

/// Ground-truth labels per (tick, dimension); ticks are 1-based.
class GroundTruth {
public:
    GroundTruth() = default;
    GroundTruth(std::size_t d, core::Tick horizon, const std::optional<AttackSpec>& attack);

    bool attacked(core::Tick t, std::size_t dim) const;
    bool tick_attacked(core::Tick t) const;
    const std::vector<std::size_t>& target_dims() const noexcept { return targets_; }

private:
    std::size_t d_ = 0;
    core::Tick horizon_ = 0;
    std::vector<std::uint8_t> cells_;
    std::vector<std::size_t> targets_;
};

struct Scenario {
    std::vector<core::DataInstance> stream;
    GroundTruth truth;
};

/// Deterministic in spec.seed. Nominal cells come from one RNG stream and the
/// attack from another, so cells outside the attack are identical to the
/// attack-free run with the same seed.
Scenario generate(const ScenarioSpec& spec);

/// One nominal draw (values only).
std::vector<double> draw(const Generator& g, std::size_t d, std::mt19937_64& rng);

/// Generator mean per dimension (the "nominal mean" attacks scale against).
std::vector<double> nominal_means(const Generator& g, std::size_t d);

void validate_generator(const Generator& g, std::size_t d);

Generator generator_from_json(const nlohmann::json& j, std::size_t d, const std::string& where);
AttackSpec attack_from_json(const nlohmann::json& j, const std::string& where);
ScenarioSpec scenario_from_json(const nlohmann::json& j, const std::string& where = "spec");

nlohmann::json to_json(const Generator& g);
nlohmann::json to_json(const AttackSpec& a);
nlohmann::json to_json(const ScenarioSpec& s);

}  // namespace knnids::streams

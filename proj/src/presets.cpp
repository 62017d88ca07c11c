#include "knnids/presets.hpp"

#include <array>
#include <cmath>

namespace knnids::streams {

GaussianMixture road_beacon_mixture() {
    GaussianMixture g;
    const std::vector<double> sd{0.5, 25.0, 15.0, 4.0};
    for (int i = 0; i <= 7; ++i) {
        const double f = i / 7.0;
        g.components.push_back({1.0 / 16.0, {21.0 + 1.5 * std::sin(3.0 * f), 2000.0 + 1000.0 * f, 1200.0 + 500.0 * f, 63.0}, sd});
        g.components.push_back({1.0 / 16.0, {20.0 + 1.5 * std::cos(3.0 * f), 2000.0 + 1000.0 * f, 1215.0 + 500.0 * f, 243.0}, sd});
    }
    return g;
}

NegativeBinomialRates segment_rate_model() {
    static constexpr std::array<double, kSegments> mu{122.0, 95.0, 160.0, 104.0, 137.0, 88.0, 175.0, 113.0, 149.0, 81.0,
                                                      128.0, 98.0, 166.0, 119.0, 142.0, 91.0, 154.0, 108.0, 133.0, 180.0};
    constexpr double r = 5.0;
    NegativeBinomialRates g;
    g.shared_intensity = true;
    for (double m : mu) {
        g.r.push_back(r);
        g.p.push_back(r / (r + m));
    }
    return g;
}

AttackSpec speed_fdi_attack(core::Tick start, core::Tick length, double magnitude) {
    return {AttackKind::fdi_uniform, {0}, start, start + length - 1, magnitude};
}

AttackSpec stealthy_ddos_attack(core::Tick start, core::Tick length, double magnitude) {
    return {AttackKind::ddos_rate_increase, {3, 11}, start, start + length - 1, magnitude};
}

ScenarioSpec fdi_road_scenario(std::uint64_t seed, core::Tick horizon, bool attacked) {
    ScenarioSpec s;
    s.generator = road_beacon_mixture();
    s.d = kRoadDims;
    s.horizon = horizon;
    s.seed = seed;
    s.source_id = "vehicle";
    if (attacked) s.attack = speed_fdi_attack();
    return s;
}

ScenarioSpec ddos_segments_scenario(std::uint64_t seed, core::Tick horizon, bool attacked) {
    ScenarioSpec s;
    s.generator = segment_rate_model();
    s.d = kSegments;
    s.horizon = horizon;
    s.seed = seed;
    s.source_id = "rsu";
    if (attacked) s.attack = stealthy_ddos_attack();
    return s;
}

detector::Hyperparams fdi_params() { return {1, 1, 1.0 / 4.0, 0.05, 2.0}; }

detector::Hyperparams ddos_params() { return {1, 1, 1.0 / 20.0, 0.3, 1.0}; }

}  // namespace knnids::streams

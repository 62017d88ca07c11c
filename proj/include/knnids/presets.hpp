#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "knnids/detector.hpp"
#include "knnids/scenario.hpp"

namespace knnids::streams {

/// Beacon fields (speed m/s, easting m, northing m, heading deg) for vehicles
/// on a two-way diagonal road: 8 positions x 2 directions, equal weights.
GaussianMixture road_beacon_mixture();

/// 20 road segments with mean rates 80..180 per tick, NB(r=5) marginals and a
/// shared traffic-density factor.
NegativeBinomialRates segment_rate_model();

inline constexpr std::size_t kRoadDims = 4;
inline constexpr std::size_t kSegments = 20;

/// Uniform falsification of the speed field, magnitude 0.3, 20 ticks from `start`.
AttackSpec speed_fdi_attack(core::Tick start = 101, core::Tick length = 20, double magnitude = 0.3);

/// Rate increase on segments {3, 11}, mean 0.3x nominal, 20 ticks from `start`.
AttackSpec stealthy_ddos_attack(core::Tick start = 181, core::Tick length = 20, double magnitude = 0.3);

ScenarioSpec fdi_road_scenario(std::uint64_t seed, core::Tick horizon = 200, bool attacked = true);
ScenarioSpec ddos_segments_scenario(std::uint64_t seed, core::Tick horizon = 220, bool attacked = true);

detector::Hyperparams fdi_params();   // k=s=1, gamma=1/4, alpha=0.05, h=2
detector::Hyperparams ddos_params();  // k=s=1, gamma=1/20, alpha=0.3

}  // namespace knnids::streams

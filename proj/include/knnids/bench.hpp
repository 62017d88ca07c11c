#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "knnids/detector.hpp"
#include "knnids/localize.hpp"
#include "knnids/scenario.hpp"

namespace knnids::bench {

inline const std::vector<double> kDefaultFarLevels{0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001};

struct TrainingConfig {
    std::size_t n = 0;
    double ratio = 1.0 / 3.0;
    detector::Hyperparams params;
    /// Pre-trained model file; replaces the inline-trained kNN model when set.
    std::optional<std::filesystem::path> model_path;
};

struct ScenarioConfig {
    std::string name;
    streams::Generator nominal;
    std::size_t d = 0;
    core::Tick horizon = 1;
    std::optional<streams::AttackSpec> attack;
    TrainingConfig training;
};

struct MethodConfig {
    std::string name;  // knn | gcusum | data_filter
    std::vector<double> thresholds;
    /// Thresholds placed at these per-window FAR levels from the FAR trials' peak statistics.
    std::vector<double> far_levels;
};

struct BenchConfig {
    std::uint64_t master_seed = 0;
    std::size_t trials = 100;
    std::size_t far_trials = 100;
    core::Tick far_window = 200;
    std::optional<core::Tick> grace;  // defaults to the attack length
    std::vector<ScenarioConfig> scenarios;
    std::vector<MethodConfig> methods;
};

/// Throws InvalidSpec naming the offending location, e.g. "scenarios[1].attack.window".
/// Relative model paths resolve against base_dir.
BenchConfig bench_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

struct BenchResult {
    std::string method;
    std::string scenario;
    double threshold = 0.0;
    double target_far = 0.0;  // NaN for explicit thresholds
    std::size_t trials = 0;
    std::size_t detected = 0;
    double avg_detection_delay = 0.0;  // over detected trials; NaN when none
    double miss_rate = 0.0;
    double pre_alarm_rate = 0.0;
    double empirical_far = 0.0;  // fraction of far_window-tick nominal streams that alarm
    std::size_t far_trials = 0;
    core::Tick far_window = 0;
    double far_bound = 0.0;  // e^{-omega0 * threshold}; NaN when not applicable
    std::vector<localize::RocPoint> roc_points;
};

/// Deterministic in master_seed; results ordered by scenario, then method, then threshold.
std::vector<BenchResult> run_bench(const BenchConfig& config);

/// Alarm time (1-based) for a statistic path: first index with path >= h.
std::optional<core::Tick> first_crossing(const std::vector<double>& path, double h);

/// Thresholds at which the fraction of peaks >= threshold is the largest value <= level.
std::vector<double> thresholds_for_far_levels(std::vector<double> peaks, const std::vector<double>& levels);

inline const std::vector<std::string> kDelayFarColumns{
    "method",         "scenario",      "threshold",  "target_far", "trials",    "detected",
    "avg_detection_delay", "miss_rate", "pre_alarm_rate", "empirical_far", "far_trials", "far_window",
    "far_bound"};
inline const std::vector<std::string> kRocColumns{"method", "scenario", "threshold", "lambda", "tpr", "fpr"};

/// Writes summary.csv (every result; header only when empty), one
/// delay_far__<scenario>__<method>.csv per pair and roc__<scenario>__<method>.csv
/// for pairs with localization output. Returns the files written.
std::vector<std::filesystem::path> export_results(const std::vector<BenchResult>& results,
                                                  const std::filesystem::path& dir);

/// Parses a delay-vs-FAR CSV back (roc_points left empty).
std::vector<BenchResult> read_delay_far_csv(const std::filesystem::path& path);

/// Parses a ROC CSV back into (threshold, point) rows.
std::vector<std::pair<double, localize::RocPoint>> read_roc_csv(const std::filesystem::path& path);

}  // namespace knnids::bench

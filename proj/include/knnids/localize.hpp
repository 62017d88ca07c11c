#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "knnids/core.hpp"
#include "knnids/detector.hpp"

namespace knnids::localize {

struct LocalizationReport {
    std::vector<double> mean_contributions;  // average per-dimension contribution over (q, T]
    double lambda = 0.0;
    std::vector<std::size_t> flagged;        // ascending
    core::Tick window_begin = 0;             // q (exclusive)
    core::Tick window_end = 0;               // T (inclusive)
};

/// Averages the logged per-dimension contributions over (q, T] and flags every
/// dimension whose average reaches lambda.
LocalizationReport localize(const detector::DetectionReport& report, double lambda);

/// Mean contributions only; shared by localize and threshold sweeps.
std::vector<double> mean_contributions(const detector::DetectionReport& report);

std::vector<std::size_t> flag(std::span<const double> mean_contributions, double lambda);

struct LabelledContributions {
    std::vector<double> mean_contributions;
    std::vector<std::size_t> truth;  // attacked dimensions
};

struct RocPoint {
    double lambda = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

/// TPR = |flagged ∩ truth| / |truth| and FPR = |flagged \ truth| / (d - |truth|),
/// pooled over all reports, one point per lambda.
std::vector<RocPoint> roc_sweep(std::span<const LabelledContributions> reports, std::span<const double> lambdas);

/// Every distinct contribution value plus one point above the maximum: the
/// grid on which the empirical ROC is exact.
std::vector<double> exact_lambda_grid(std::span<const LabelledContributions> reports);

/// Highest TPR among points with FPR <= max_fpr (0 if none qualify).
RocPoint best_tpr_at_fpr(std::span<const RocPoint> roc, double max_fpr);

/// Default lambda: the given quantile of per-dimension single-tick
/// contributions over held-out nominal data.
double nominal_lambda(const detector::TrainedModel& model, std::span<const core::DataInstance> nominal_raw,
                      double quantile = 0.99);

}  // namespace knnids::localize

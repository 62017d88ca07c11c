#include "knnids/localize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "knnids/error.hpp"

namespace knnids::localize {

std::vector<double> mean_contributions(const detector::DetectionReport& report) {
    const auto& window = report.evidence_window;
    if (window.empty() || report.alarm_time_T <= report.onset_q) {
        throw EmptyWindow("localize: empty evidence window (T=" + std::to_string(report.alarm_time_T) +
                          ", q=" + std::to_string(report.onset_q) + ")");
    }
    std::vector<double> mean(window.front().per_dim.size(), 0.0);
    for (const auto& rec : window) {
        for (std::size_t n = 0; n < mean.size(); ++n) mean[n] += rec.per_dim[n];
    }
    const double len = static_cast<double>(report.alarm_time_T - report.onset_q);
    for (auto& m : mean) m /= len;
    return mean;
}

std::vector<std::size_t> flag(std::span<const double> mean, double lambda) {
    std::vector<std::size_t> out;
    for (std::size_t n = 0; n < mean.size(); ++n) {
        if (mean[n] >= lambda) out.push_back(n);
    }
    return out;
}

LocalizationReport localize(const detector::DetectionReport& report, double lambda) {
    LocalizationReport out;
    out.mean_contributions = mean_contributions(report);
    out.lambda = lambda;
    out.flagged = flag(out.mean_contributions, lambda);
    out.window_begin = report.onset_q;
    out.window_end = report.alarm_time_T;
    return out;
}

std::vector<RocPoint> roc_sweep(std::span<const LabelledContributions> reports, std::span<const double> lambdas) {
    std::vector<RocPoint> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) {
        std::size_t tp = 0, pos = 0, fp = 0, neg = 0;
        for (const auto& r : reports) {
            const std::size_t d = r.mean_contributions.size();
            std::vector<bool> is_truth(d, false);
            for (auto n : r.truth) {
                if (n < d) is_truth[n] = true;
            }
            for (std::size_t n = 0; n < d; ++n) {
                const bool flagged = r.mean_contributions[n] >= lambda;
                if (is_truth[n]) {
                    ++pos;
                    tp += flagged;
                } else {
                    ++neg;
                    fp += flagged;
                }
            }
        }
        out.push_back({lambda, pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0,
                       neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0});
    }
    return out;
}

std::vector<double> exact_lambda_grid(std::span<const LabelledContributions> reports) {
    std::vector<double> grid;
    for (const auto& r : reports) grid.insert(grid.end(), r.mean_contributions.begin(), r.mean_contributions.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const double top = grid.empty() ? 1.0 : std::nextafter(grid.back(), std::numeric_limits<double>::infinity());
    grid.push_back(top);
    return grid;
}

RocPoint best_tpr_at_fpr(std::span<const RocPoint> roc, double max_fpr) {
    RocPoint best{std::numeric_limits<double>::infinity(), 0.0, 0.0};
    for (const auto& p : roc) {
        if (p.fpr <= max_fpr && (p.tpr > best.tpr || (p.tpr == best.tpr && p.fpr < best.fpr))) best = p;
    }
    return best;
}

double nominal_lambda(const detector::TrainedModel& model, std::span<const core::DataInstance> nominal_raw,
                      double quantile) {
    if (nominal_raw.empty()) throw InsufficientData("nominal_lambda: no held-out nominal data");
    std::vector<double> pooled;
    pooled.reserve(nominal_raw.size() * model.d);
    std::vector<double> buf(model.d);
    for (const auto& x : nominal_raw) {
        core::normalize_into(x.values, model.bounds, buf);
        const auto ev = detector::evidence(buf, model);
        pooled.insert(pooled.end(), ev.per_dim.begin(), ev.per_dim.end());
    }
    std::sort(pooled.begin(), pooled.end());
    const double pos = std::clamp(quantile, 0.0, 1.0) * static_cast<double>(pooled.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, pooled.size() - 1);
    return pooled[lo] + (pos - static_cast<double>(lo)) * (pooled[hi] - pooled[lo]);
}

}  // namespace knnids::localize

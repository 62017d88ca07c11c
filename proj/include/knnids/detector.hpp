#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knnids/core.hpp"

namespace knnids::detector {

struct Hyperparams {
    std::size_t k = 1;   // neighbors searched
    std::size_t s = 1;   // neighbors summed: ranks k-s+1..k
    double gamma = 1.0;  // distance exponent
    double alpha = 0.05; // significance level for the baseline percentile
    double h = 1.0;      // decision threshold

    void validate() const;
    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Row-major matrix of normalized reference points (the second training partition).
class ReferenceSet {
public:
    ReferenceSet() = default;
    ReferenceSet(std::size_t dim, std::vector<double> rows);

    static ReferenceSet from_instances(std::span<const core::DataInstance> xs);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const ReferenceSet&, const ReferenceSet&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

struct Neighbor {
    std::size_t index;
    double distance;  // Euclidean
};

struct TotalDistance {
    double L = 0.0;
    /// Ranks k-s+1..k in rank order.
    std::vector<Neighbor> neighbors;
};

/// L = sum over ranks j = k-s+1..k of e_j^gamma. Exact scan; distance ties go
/// to the lower reference index.
TotalDistance total_distance(std::span<const double> x, const ReferenceSet& reference, std::size_t k,
                             std::size_t s, double gamma);

struct TrainedModel {
    ReferenceSet reference;
    double baseline_LM = 0.0;
    double evidence_bound_phi = 0.0;
    core::NormalizationBounds bounds;
    Hyperparams params;
    std::size_t d = 0;
    std::size_t M = 0;

    friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Training phase. `part` holds raw (unnormalized) instances; `bounds` must
/// come from the full training set.
TrainedModel train(const core::Partition& part, const core::NormalizationBounds& bounds,
                   const Hyperparams& params);

/// fit_bounds + partition + train in one go.
TrainedModel fit(std::span<const core::DataInstance> training, const Hyperparams& params, double ratio,
                 std::uint64_t seed);

/// Total distances L_i of every query against the reference set, in input order.
std::vector<double> total_distances(std::span<const core::DataInstance> normalized, const ReferenceSet& reference,
                                    const Hyperparams& params);

struct Evidence {
    double D = 0.0;
    /// Squared coordinate differences summed over the selected neighbors.
    std::vector<double> per_dim;
};

/// `x` must already be normalized with model.bounds.
Evidence evidence(std::span<const double> x, const TrainedModel& model);

struct EvidenceRecord {
    core::Tick t = 0;
    double D = 0.0;
    std::vector<double> per_dim;
};

struct DetectorState {
    double s_stat = 0.0;
    core::Tick t = 0;
    core::Tick q = 0;
    /// Records with t > q only; cleared whenever the statistic returns to zero.
    std::vector<EvidenceRecord> evidence_log;
};

struct StepResult {
    DetectorState state;
    bool alarmed = false;
};

/// s' = max(s + D, 0); q := t when s' == 0.
StepResult step(DetectorState state, double D, std::vector<double> per_dim, double h);

struct DetectionReport {
    std::string source_id;
    core::Tick alarm_time_T = 0;
    core::Tick onset_q = 0;
    double final_stat = 0.0;
    std::vector<EvidenceRecord> evidence_window;  // t in (q, T]
};

/// Normalize -> evidence -> step until the first alarm. Returns nullopt when
/// the stream ends without one.
std::optional<DetectionReport> run_stream(std::span<const core::DataInstance> stream, const TrainedModel& model);

/// Stateful per-stream wrapper over one shared model, for incremental feeds.
class Detector {
public:
    explicit Detector(const TrainedModel& model, std::string source_id = {});

    /// Feeds one raw instance. Returns the report on the alarming step; after
    /// an alarm the detector is finished and further observations are rejected.
    std::optional<DetectionReport> observe(const core::DataInstance& raw);

    const DetectorState& state() const noexcept { return state_; }
    bool finished() const noexcept { return finished_; }

private:
    const TrainedModel* model_;
    std::string source_id_;
    DetectorState state_;
    std::vector<double> scratch_;
    bool finished_ = false;
};

}  // namespace knnids::detector

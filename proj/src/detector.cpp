#include "knnids/detector.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "knnids/error.hpp"

namespace knnids::detector {

void Hyperparams::validate() const {
    if (k < 1) throw InvalidSpec("hyperparameter k must be >= 1");
    if (s < 1 || s > k) throw InvalidSpec("hyperparameter s must satisfy 1 <= s <= k");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidSpec("hyperparameter gamma must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidSpec("hyperparameter alpha must lie in (0,1)");
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidSpec("hyperparameter h must be > 0");
}

ReferenceSet::ReferenceSet(std::size_t dim, std::vector<double> rows) : dim_(dim), data_(std::move(rows)) {
    if (dim_ == 0 || data_.size() % dim_ != 0) {
        throw DimensionMismatch("reference data is not a whole number of rows");
    }
}

ReferenceSet ReferenceSet::from_instances(std::span<const core::DataInstance> xs) {
    if (xs.empty()) return {};
    const std::size_t d = xs.front().dim();
    core::require_same_dim(xs, d);
    std::vector<double> rows;
    rows.reserve(xs.size() * d);
    for (const auto& x : xs) rows.insert(rows.end(), x.values.begin(), x.values.end());
    return ReferenceSet(d, std::move(rows));
}

TotalDistance total_distance(std::span<const double> x, const ReferenceSet& reference, std::size_t k,
                             std::size_t s, double gamma) {
    if (reference.size() < k) {
        throw NotEnoughReferencePoints("need at least k=" + std::to_string(k) + " reference points, have " +
                                       std::to_string(reference.size()));
    }
    if (x.size() != reference.dim()) {
        throw DimensionMismatch("query has dimension " + std::to_string(x.size()) + ", reference has " +
                                std::to_string(reference.dim()));
    }

    // Max-heap of the k best (squared distance, index) pairs. Scanning in index
    // order with a strict comparison keeps the earlier point on ties.
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> best;
    const std::size_t d = reference.dim();
    const double* row = reference.data().data();
    for (std::size_t i = 0; i < reference.size(); ++i, row += d) {
        double sq = 0.0;
        for (std::size_t n = 0; n < d; ++n) {
            const double diff = x[n] - row[n];
            sq += diff * diff;
        }
        if (best.size() < k) {
            best.emplace(sq, i);
        } else if (Entry{sq, i} < best.top()) {
            best.pop();
            best.emplace(sq, i);
        }
    }

    std::vector<Entry> ranked(k);
    for (std::size_t j = k; j-- > 0;) {
        ranked[j] = best.top();
        best.pop();
    }

    TotalDistance out;
    out.neighbors.reserve(s);
    for (std::size_t j = k - s; j < k; ++j) {
        const double e = std::sqrt(ranked[j].first);
        out.L += std::pow(e, gamma);
        out.neighbors.push_back({ranked[j].second, e});
    }
    return out;
}

std::vector<double> total_distances(std::span<const core::DataInstance> normalized, const ReferenceSet& reference,
                                    const Hyperparams& params) {
    std::vector<double> L;
    L.reserve(normalized.size());
    for (const auto& x : normalized) {
        L.push_back(total_distance(x.values, reference, params.k, params.s, params.gamma).L);
    }
    return L;
}

TrainedModel train(const core::Partition& part, const core::NormalizationBounds& bounds, const Hyperparams& params) {
    params.validate();
    const std::size_t d = bounds.dim();
    const std::size_t n1 = part.set1.size();
    if (n1 == 0) throw InsufficientData("train: first partition is empty");
    const std::size_t M = core::guarded_floor(static_cast<double>(n1) * (1.0 - params.alpha));
    if (M < 1) {
        throw InsufficientData("train: floor(N1*(1-alpha)) = 0 for N1=" + std::to_string(n1));
    }
    if (part.set2.size() < params.k) {
        throw NotEnoughReferencePoints("train: second partition has " + std::to_string(part.set2.size()) +
                                       " points, need k=" + std::to_string(params.k));
    }
    core::require_same_dim(part.set1, d);
    core::require_same_dim(part.set2, d);

    std::vector<core::DataInstance> ref_norm;
    ref_norm.reserve(part.set2.size());
    for (const auto& x : part.set2) ref_norm.push_back(core::normalize(x, bounds));

    TrainedModel model;
    model.reference = ReferenceSet::from_instances(ref_norm);
    model.bounds = bounds;
    model.params = params;
    model.d = d;
    model.M = M;

    std::vector<double> Li;
    Li.reserve(n1);
    std::vector<double> buf(d);
    for (const auto& x : part.set1) {
        core::normalize_into(x.values, bounds, buf);
        Li.push_back(total_distance(buf, model.reference, params.k, params.s, params.gamma).L);
    }
    std::sort(Li.begin(), Li.end());
    const double dd = static_cast<double>(d);
    model.baseline_LM = Li[M - 1];
    model.evidence_bound_phi = std::pow(Li.back(), dd) - std::pow(model.baseline_LM, dd);
    return model;
}

TrainedModel fit(std::span<const core::DataInstance> training, const Hyperparams& params, double ratio,
                 std::uint64_t seed) {
    const auto bounds = core::fit_bounds(training);
    const auto part = core::partition(training, ratio, seed);
    return train(part, bounds, params);
}

Evidence evidence(std::span<const double> x, const TrainedModel& model) {
    const auto& p = model.params;
    const TotalDistance td = total_distance(x, model.reference, p.k, p.s, p.gamma);
    const double dd = static_cast<double>(model.d);

    Evidence ev;
    ev.D = std::pow(td.L, dd) - std::pow(model.baseline_LM, dd);
    ev.per_dim.assign(model.d, 0.0);
    for (const auto& nb : td.neighbors) {
        const auto y = model.reference.row(nb.index);
        for (std::size_t n = 0; n < model.d; ++n) {
            const double diff = x[n] - y[n];
            ev.per_dim[n] += diff * diff;
        }
    }
    return ev;
}

StepResult step(DetectorState state, double D, std::vector<double> per_dim, double h) {
    state.t += 1;
    state.s_stat = std::max(state.s_stat + D, 0.0);
    if (state.s_stat == 0.0) {
        state.q = state.t;
        state.evidence_log.clear();
    } else {
        state.evidence_log.push_back({state.t, D, std::move(per_dim)});
    }
    const bool alarmed = state.s_stat >= h;
    return {std::move(state), alarmed};
}

namespace {

DetectionReport make_report(const DetectorState& st, const std::string& source_id) {
    return {source_id, st.t, st.q, st.s_stat, st.evidence_log};
}

}  // namespace

Detector::Detector(const TrainedModel& model, std::string source_id)
    : model_(&model), source_id_(std::move(source_id)), scratch_(model.d) {}

std::optional<DetectionReport> Detector::observe(const core::DataInstance& raw) {
    if (finished_) {
        throw DataError("detector for '" + source_id_ + "' already alarmed at T=" + std::to_string(state_.t));
    }
    if (raw.dim() != model_->d) {
        throw DimensionMismatch("instance at t=" + std::to_string(raw.t) + " has dimension " +
                                std::to_string(raw.dim()) + ", model expects " + std::to_string(model_->d));
    }
    for (double v : raw.values) {
        if (!std::isfinite(v)) {
            throw DataError("non-finite value in instance at t=" + std::to_string(raw.t));
        }
    }
    core::normalize_into(raw.values, model_->bounds, scratch_);
    auto ev = evidence(scratch_, *model_);
    auto res = step(std::move(state_), ev.D, std::move(ev.per_dim), model_->params.h);
    state_ = std::move(res.state);
    if (!res.alarmed) return std::nullopt;
    finished_ = true;
    return make_report(state_, source_id_);
}

std::optional<DetectionReport> run_stream(std::span<const core::DataInstance> stream, const TrainedModel& model) {
    Detector det(model, stream.empty() ? std::string{} : stream.front().source_id);
    for (const auto& x : stream) {
        if (auto rep = det.observe(x)) return rep;
    }
    return std::nullopt;
}

}  // namespace knnids::detector

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace knnids::core {

using Tick = std::uint64_t;

/// One d-dimensional observation: a beacon's numeric fields or a vector of
/// per-segment message rates.
struct DataInstance {
    std::vector<double> values;
    Tick t = 0;
    std::string source_id;

    std::size_t dim() const noexcept { return values.size(); }
    friend bool operator==(const DataInstance&, const DataInstance&) = default;
};

/// Per-dimension min/max learned from training data. mins[n] < maxs[n].
struct NormalizationBounds {
    std::vector<double> mins;
    std::vector<double> maxs;

    std::size_t dim() const noexcept { return mins.size(); }
    friend bool operator==(const NormalizationBounds&, const NormalizationBounds&) = default;
};

struct Partition {
    std::vector<DataInstance> set1;
    std::vector<DataInstance> set2;
    std::uint64_t seed = 0;
};

inline constexpr double kDefaultPartitionRatio = 1.0 / 3.0;

NormalizationBounds fit_bounds(std::span<const DataInstance> training);

/// Affine map onto [0,1] per dimension. Values outside the training range are
/// kept as-is (no clamping).
DataInstance normalize(const DataInstance& x, const NormalizationBounds& b);
void normalize_into(std::span<const double> raw, const NormalizationBounds& b, std::span<double> out);

/// Seeded uniform shuffle; set1 receives floor(ratio * N) instances.
Partition partition(std::span<const DataInstance> data, double ratio, std::uint64_t seed);

/// floor(x) tolerant of products such as 15000 * (1/3) landing just below an integer.
std::size_t guarded_floor(double x);

/// Counter-mode seed derivation (splitmix64 finalizer). Independent streams
/// for trial i of a run are derive_seed(master, i).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

void require_same_dim(std::span<const DataInstance> data, std::size_t d);

}  // namespace knnids::core

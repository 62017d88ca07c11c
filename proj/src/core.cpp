#include "knnids/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "knnids/error.hpp"

namespace knnids::core {

void require_same_dim(std::span<const DataInstance> data, std::size_t d) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].dim() != d) {
            throw DimensionMismatch("instance " + std::to_string(i) + " has dimension " +
                                    std::to_string(data[i].dim()) + ", expected " + std::to_string(d));
        }
    }
}

NormalizationBounds fit_bounds(std::span<const DataInstance> training) {
    if (training.empty()) {
        throw InsufficientData("fit_bounds: empty training set");
    }
    const std::size_t d = training.front().dim();
    if (d == 0) {
        throw DimensionMismatch("fit_bounds: zero-dimensional instances");
    }
    require_same_dim(training, d);

    NormalizationBounds b{training.front().values, training.front().values};
    for (const auto& x : training) {
        for (std::size_t n = 0; n < d; ++n) {
            b.mins[n] = std::min(b.mins[n], x.values[n]);
            b.maxs[n] = std::max(b.maxs[n], x.values[n]);
        }
    }
    for (std::size_t n = 0; n < d; ++n) {
        if (!(b.mins[n] < b.maxs[n])) {
            throw DegenerateDimension(n);
        }
    }
    return b;
}

void normalize_into(std::span<const double> raw, const NormalizationBounds& b, std::span<double> out) {
    if (raw.size() != b.dim() || out.size() != b.dim()) {
        throw DimensionMismatch("normalize: instance has dimension " + std::to_string(raw.size()) +
                                ", bounds have " + std::to_string(b.dim()));
    }
    for (std::size_t n = 0; n < raw.size(); ++n) {
        out[n] = (raw[n] - b.mins[n]) / (b.maxs[n] - b.mins[n]);
    }
}

DataInstance normalize(const DataInstance& x, const NormalizationBounds& b) {
    DataInstance out{std::vector<double>(x.dim()), x.t, x.source_id};
    normalize_into(x.values, b, out.values);
    return out;
}

std::size_t guarded_floor(double x) {
    return static_cast<std::size_t>(std::floor(x + 1e-9));
}

Partition partition(std::span<const DataInstance> data, double ratio, std::uint64_t seed) {
    const std::size_t n = data.size();
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw InsufficientData("partition: ratio must lie in (0,1)");
    }
    if (n < 2) {
        throw InsufficientData("partition: need at least 2 instances, got " + std::to_string(n));
    }
    const std::size_t n1 = guarded_floor(ratio * static_cast<double>(n));
    if (n1 < 1 || n - n1 < 1) {
        throw InsufficientData("partition: ratio " + std::to_string(ratio) + " leaves an empty side for N=" +
                               std::to_string(n));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    Partition p;
    p.seed = seed;
    p.set1.reserve(n1);
    p.set2.reserve(n - n1);
    for (std::size_t i = 0; i < n; ++i) {
        (i < n1 ? p.set1 : p.set2).push_back(data[order[i]]);
    }
    return p;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace knnids::core

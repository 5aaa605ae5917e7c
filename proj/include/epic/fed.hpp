#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epic/errors.hpp"
#include "epic/weights.hpp"

namespace epic {

enum class AggregationScheme { uniform, sample_weighted };

inline const char* to_string(AggregationScheme s) {
    return s == AggregationScheme::uniform ? "uniform" : "sample_weighted";
}

template <typename S>
struct WeightedContribution {
    WeightSet<S> weights;
    std::uint64_t sample_count = 0;
};

// Elementwise mean of the contributions: plain mean for `uniform`,
// sample-count weighted mean for `sample_weighted` (FedAvg). Batchnorm
// running statistics are averaged like any other tensor. Kahan-compensated
// extended-precision accumulation keeps the result independent of
// contribution order to well below single-precision resolution.
template <typename S>
WeightSet<S> aggregate(const std::vector<WeightedContribution<S>>& contributions, AggregationScheme scheme) {
    if (contributions.empty()) throw EmptyContributionList("aggregate: no contributions");
    const WeightSet<S>& first = contributions.front().weights;
    for (const auto& c : contributions) {
        if (c.sample_count == 0) throw InvalidSpec("aggregate: contribution with sample_count 0");
        if (!c.weights.compatible_with(first))
            throw IncompatibleShapes("aggregate: contributions are not aggregation-compatible");
    }

    WeightSet<S> out = zeros_like(first);
    long double total_weight = 0.0L;
    for (const auto& c : contributions)
        total_weight += scheme == AggregationScheme::uniform ? 1.0L : (long double)(c.sample_count);

    const std::size_t k = contributions.size();
    for (std::size_t li = 0; li < out.layers.size(); ++li) {
        auto& dst = out.layers[li].values;
        for (std::size_t e = 0; e < dst.size(); ++e) {
            long double sum = 0.0L, comp = 0.0L;
            for (std::size_t c = 0; c < k; ++c) {
                const long double wgt =
                    scheme == AggregationScheme::uniform ? 1.0L : (long double)(contributions[c].sample_count);
                const long double term = wgt * (long double)(contributions[c].weights.layers[li].values[e]);
                const long double y = term - comp;
                const long double t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
            dst[e] = S(sum / total_weight);
        }
    }
    return out;
}

// Convex combination local_fraction * local + (1 - local_fraction) * global,
// computed as g + f*(l - g) so merging a set with itself is exact for any
// fraction.
template <typename S>
WeightSet<S> merge_local_global(const WeightSet<S>& local, const WeightSet<S>& global_w, double local_fraction = 0.5) {
    if (!(local_fraction >= 0.0 && local_fraction <= 1.0))
        throw InvalidSpec("merge_local_global: local_fraction must be in [0,1]");
    if (!local.compatible_with(global_w))
        throw IncompatibleShapes("merge_local_global: weight sets are not aggregation-compatible");
    if (local_fraction == 1.0) return local;
    WeightSet<S> out = global_w;
    for (std::size_t li = 0; li < out.layers.size(); ++li) {
        const auto& lv = local.layers[li].values;
        auto& gv = out.layers[li].values;
        for (std::size_t e = 0; e < gv.size(); ++e)
            gv[e] = S(double(gv[e]) + local_fraction * (double(lv[e]) - double(gv[e])));
    }
    return out;
}

} // namespace epic

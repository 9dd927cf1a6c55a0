#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <json.hpp>

#include "slld/dataset.hpp"
#include "slld/errors.hpp"
#include "slld/random.hpp"

namespace slld {

/// Result of 1-D K-means over ground-truth aspect ratios.
struct RatioClustering {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<double> centroids;      ///< sorted ascending
    std::vector<std::size_t> counts;    ///< members per centroid, same order
    std::vector<int> assignments;       ///< per input value, index into centroids
    double inertia = 0.0;               ///< sum of squared distances at convergence
    std::vector<double> inertia_trace;  ///< inertia after each assignment step
    int iterations = 0;
};

/// Lloyd iterations on scalar values with k-means++ seeding. Deterministic
/// under the seed; stops when assignments are stable or max_iter is reached.
/// Centroids come back sorted with assignments remapped to match.
inline RatioClustering fit_kmeans_1d(const std::vector<double>& values, int k,
                                     std::uint64_t seed, int max_iter = 100) {
    if (k < 1) throw InvalidArgumentError("kmeans: k must be >= 1");
    if (values.size() < static_cast<std::size_t>(k))
        throw InvalidArgumentError("kmeans: " + std::to_string(values.size()) +
                                   " values for k=" + std::to_string(k));
    if (max_iter < 1) throw InvalidArgumentError("kmeans: max_iter must be >= 1");

    const std::size_t n = values.size();
    std::mt19937_64 rng(seed);

    // k-means++ seeding: first center uniform, then proportional to squared
    // distance from the nearest chosen center.
    std::vector<double> centers;
    centers.reserve(static_cast<std::size_t>(k));
    centers.push_back(values[uniform_index(rng, n)]);
    std::vector<double> d2(n);
    while (centers.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::abs(values[i] - centers[0]);
            for (std::size_t c = 1; c < centers.size(); ++c)
                best = std::min(best, std::abs(values[i] - centers[c]));
            d2[i] = best * best;
            total += d2[i];
        }
        if (total <= 0.0) {
            centers.push_back(values[uniform_index(rng, n)]);
            continue;
        }
        double r = uniform_unit(rng) * total;
        std::size_t pick = n - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (r < acc) {
                pick = i;
                break;
            }
        }
        centers.push_back(values[pick]);
    }

    RatioClustering out;
    out.k = k;
    out.seed = seed;

    std::vector<int> assign(n, -1);
    std::vector<int> prev(n, -2);
    for (int iter = 0; iter < max_iter; ++iter) {
        // Assignment step; ties go to the lowest center index.
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::abs(values[i] - centers[0]);
            for (int c = 1; c < k; ++c) {
                double d = std::abs(values[i] - centers[static_cast<std::size_t>(c)]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            assign[i] = best;
            inertia += best_d * best_d;
        }
        out.inertia_trace.push_back(inertia);
        out.inertia = inertia;
        out.iterations = iter + 1;
        if (assign == prev) break;
        prev = assign;

        // Update step; an empty cluster keeps its previous center.
        std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
        std::vector<std::size_t> cnt(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[static_cast<std::size_t>(assign[i])] += values[i];
            ++cnt[static_cast<std::size_t>(assign[i])];
        }
        for (int c = 0; c < k; ++c)
            if (cnt[static_cast<std::size_t>(c)] > 0)
                centers[static_cast<std::size_t>(c)] =
                    sum[static_cast<std::size_t>(c)] /
                    static_cast<double>(cnt[static_cast<std::size_t>(c)]);
    }

    // Present centroids sorted ascending; remap assignments accordingly.
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return centers[static_cast<std::size_t>(a)] < centers[static_cast<std::size_t>(b)];
    });
    std::vector<int> rank(static_cast<std::size_t>(k));
    for (int pos = 0; pos < k; ++pos)
        rank[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos;

    out.centroids.resize(static_cast<std::size_t>(k));
    out.counts.assign(static_cast<std::size_t>(k), 0);
    for (int pos = 0; pos < k; ++pos)
        out.centroids[static_cast<std::size_t>(pos)] =
            centers[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])];
    out.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.assignments[i] = rank[static_cast<std::size_t>(assign[i])];
        ++out.counts[static_cast<std::size_t>(out.assignments[i])];
    }
    return out;
}

/// Aspect ratios (w/h) of every instance, in dataset order.
inline std::vector<double> instance_aspect_ratios(const LayoutDataset& ds) {
    std::vector<double> out;
    out.reserve(ds.instances.size());
    for (const auto& inst : ds.instances) out.push_back(inst.box.aspect_ratio());
    return out;
}

/// K-means over the 1-D aspect ratios of a dataset's ground-truth boxes.
inline RatioClustering fit_ratio_kmeans(const LayoutDataset& ds, int k,
                                        std::uint64_t seed, int max_iter = 100) {
    return fit_kmeans_1d(instance_aspect_ratios(ds), k, seed, max_iter);
}

/// Reduces a fitted clustering to n representative ratios: centroids in
/// decreasing-population order (ties to the smaller ratio), skipping any
/// within `dedup_tol` of an already accepted one, until n are taken. Returns
/// fewer than n only if the whole centroid set collapses under dedup.
/// Output is sorted ascending.
inline std::vector<double> select_anchor_ratios(const RatioClustering& clustering,
                                                std::size_t n,
                                                double dedup_tol = 0.05) {
    if (n > static_cast<std::size_t>(clustering.k))
        throw InvalidArgumentError("select_anchor_ratios: n exceeds cluster count");

    std::vector<std::size_t> order(clustering.centroids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (clustering.counts[a] != clustering.counts[b])
            return clustering.counts[a] > clustering.counts[b];
        return clustering.centroids[a] < clustering.centroids[b];
    });

    std::vector<double> chosen;
    for (std::size_t idx : order) {
        if (chosen.size() == n) break;
        double c = clustering.centroids[idx];
        bool dup = std::any_of(chosen.begin(), chosen.end(), [&](double r) {
            return std::abs(r - c) <= dedup_tol;
        });
        if (!dup) chosen.push_back(c);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

/// Clustering report in the on-disk JSON layout.
inline nlohmann::json clustering_to_json(const RatioClustering& c) {
    return {{"k", c.k},
            {"seed", c.seed},
            {"centroids", c.centroids},
            {"counts", c.counts},
            {"inertia", c.inertia}};
}

} // namespace slld

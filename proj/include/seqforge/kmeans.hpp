#ifndef SEQFORGE_KMEANS_HPP
#define SEQFORGE_KMEANS_HPP

#include <cstdint>
#include <vector>

#include "seqforge/tensor.hpp"

namespace seqforge {

struct ClusterModel {
    Tensor centroids;       // (k, dim)
    std::size_t k = 0;
    std::uint64_t seed = 0;
};

struct KmeansResult {
    std::vector<int> assignments;
    ClusterModel model;
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> inertia_history;  // per Lloyd iteration
};

/// Lloyd's algorithm with k-means++ seeding. Deterministic given
/// (points, k, seed): ties in nearest-centroid go to the lower index, and an
/// emptied cluster is re-seeded to the point farthest from its assigned
/// centroid. Stops when no assignment changes or after 300 iterations.
KmeansResult kmeans(const Tensor& points, std::size_t k, std::uint64_t seed);

/// Nearest-centroid assignment (lower index wins ties).
std::vector<int> assign_nearest(const Tensor& points, const Tensor& centroids);

}  // namespace seqforge

#endif

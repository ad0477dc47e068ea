#include "seqforge/kmeans.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "seqforge/rng.hpp"

namespace seqforge {

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

std::vector<int> assign_nearest(const Tensor& points, const Tensor& centroids) {
    const std::size_t n = points.dim(0), dim = points.dim(1), k = centroids.dim(0);
    std::vector<int> out(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = sq_dist(points.data() + i * dim, centroids.data() + c * dim, dim);
            if (d < best) {
                best = d;
                best_c = static_cast<int>(c);
            }
        }
        out[i] = best_c;
    }
    return out;
}

KmeansResult kmeans(const Tensor& points, std::size_t k, std::uint64_t seed) {
    if (points.rank() != 2) throw std::invalid_argument("kmeans: points must be (n, dim)");
    const std::size_t n = points.dim(0), dim = points.dim(1);
    if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= n");
    for (double x : points.values())
        if (!std::isfinite(x)) throw std::invalid_argument("kmeans: non-finite point");

    Rng rng(seed);
    Tensor centroids({k, dim});

    // k-means++ seeding
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(rng.uniform_index(n));
    for (std::size_t d = 0; d < dim; ++d) centroids.at(0, d) = points.at(first, d);
    for (std::size_t c = 1; c < k; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 =
                sq_dist(points.data() + i * dim, centroids.data() + (c - 1) * dim, dim);
            if (d2 < min_d2[i]) min_d2[i] = d2;
        }
        std::size_t chosen = rng.weighted_index(min_d2);
        for (std::size_t d = 0; d < dim; ++d) centroids.at(c, d) = points.at(chosen, d);
    }

    std::vector<int> assign(n, -1);
    std::vector<std::size_t> counts(k, 0);
    std::vector<double> history;
    double inertia = 0.0;
    int iter = 0;
    for (; iter < 300; ++iter) {
        // assignment step
        bool changed = false;
        inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(points.data() + i * dim, centroids.data() + c * dim, dim);
                if (d < best) {
                    best = d;
                    best_c = static_cast<int>(c);
                }
            }
            if (assign[i] != best_c) {
                assign[i] = best_c;
                changed = true;
            }
            inertia += best;
        }
        history.push_back(inertia);
        if (!changed && iter > 0) break;

        // update step
        centroids.fill(0.0);
        std::fill(counts.begin(), counts.end(), std::size_t{0});
        for (std::size_t i = 0; i < n; ++i) {
            counts[assign[i]]++;
            for (std::size_t d = 0; d < dim; ++d)
                centroids.at(assign[i], d) += points.at(i, d);
        }
        for (std::size_t c = 0; c < k; ++c)
            if (counts[c] > 0)
                for (std::size_t d = 0; d < dim; ++d)
                    centroids.at(c, d) /= static_cast<double>(counts[c]);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            // Empty cluster: re-seed to the point farthest from its assigned
            // centroid (first such point on ties), then claim that point so a
            // second empty cluster picks a different one.
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = sq_dist(points.data() + i * dim,
                                         centroids.data() + assign[i] * dim, dim);
                if (d > worst) {
                    worst = d;
                    worst_i = i;
                }
            }
            for (std::size_t d = 0; d < dim; ++d) centroids.at(c, d) = points.at(worst_i, d);
            assign[worst_i] = static_cast<int>(c);
        }
    }

    KmeansResult res;
    res.assignments = std::move(assign);
    res.model.centroids = std::move(centroids);
    res.model.k = k;
    res.model.seed = seed;
    res.inertia = inertia;
    res.iterations = iter;
    res.inertia_history = std::move(history);
    return res;
}

}  // namespace seqforge

#include "seqforge/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace seqforge {

SymmetricEigen symmetric_eigen(const Tensor& sym, double sym_tol) {
    if (sym.rank() != 2 || sym.dim(0) != sym.dim(1))
        throw std::invalid_argument("symmetric_eigen: square matrix required");
    const std::size_t n = sym.dim(0);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(sym.at(i, j)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(sym.at(i, j) - sym.at(j, i)) > sym_tol * std::max(1.0, scale))
                throw std::invalid_argument("symmetric_eigen: matrix is not symmetric");

    // Work on a symmetrized copy so rounding asymmetry inside tolerance
    // cannot leak into the rotations.
    std::vector<double> a(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = 0.5 * (sym.at(i, j) + sym.at(j, i));
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    const int max_sweeps = 128;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off <= 1e-24 * std::max(1.0, scale * scale)) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a[i * n + p];
                    const double aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a[p * n + i];
                    const double aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v[i * n + p];
                    const double viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return a[i * n + i] > a[j * n + j];
    });

    SymmetricEigen out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Tensor({n, n});
    for (std::size_t c = 0; c < n; ++c) {
        out.eigenvalues[c] = a[order[c] * n + order[c]];
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors.at(r, c) = v[r * n + order[c]];
    }
    return out;
}

ClusterIndicator top_k_eigenvectors(const Tensor& gram, std::size_t k) {
    if (gram.rank() != 2 || gram.dim(0) != gram.dim(1))
        throw std::invalid_argument("top_k_eigenvectors: square matrix required");
    const std::size_t n = gram.dim(0);
    if (k < 1 || k > n) throw std::invalid_argument("top_k_eigenvectors: k out of range");

    SymmetricEigen eig = symmetric_eigen(gram);

    ClusterIndicator ind;
    ind.matrix = Tensor({n, k});
    for (std::size_t c = 0; c < k; ++c) {
        // Sign convention: first entry of magnitude > 1e-12 made positive.
        double flip = 1.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double x = eig.eigenvectors.at(r, c);
            if (std::abs(x) > 1e-12) {
                flip = x > 0.0 ? 1.0 : -1.0;
                break;
            }
        }
        for (std::size_t r = 0; r < n; ++r) ind.matrix.at(r, c) = flip * eig.eigenvectors.at(r, c);
    }
    return ind;
}

}  // namespace seqforge

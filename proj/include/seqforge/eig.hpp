#ifndef SEQFORGE_EIG_HPP
#define SEQFORGE_EIG_HPP

#include <cstddef>

#include "seqforge/tensor.hpp"

namespace seqforge {

/// Orthonormal relaxation of a cluster membership matrix: the (n x k) basis
/// of leading eigenvectors of a latent Gram matrix.
struct ClusterIndicator {
    Tensor matrix;            // (n, k), orthonormal columns
    int stale_counter = 0;    // iterations since last refresh

    std::size_t rows() const { return matrix.dim(0); }
    std::size_t k() const { return matrix.dim(1); }
};

/// Full eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
/// Eigenvalues come back in descending order (stable under ties, so equal
/// eigenvalues keep their pre-sort index order). Throws std::invalid_argument
/// if `sym` is not symmetric within `sym_tol`.
struct SymmetricEigen {
    std::vector<double> eigenvalues;  // descending
    Tensor eigenvectors;              // (n, n), column i pairs with eigenvalue i
};
SymmetricEigen symmetric_eigen(const Tensor& sym, double sym_tol = 1e-8);

/// Leading k eigenvectors of a symmetric PSD Gram matrix, as a
/// ClusterIndicator. Ties broken by index order; each column's sign is fixed
/// so its first nonzero entry is positive.
ClusterIndicator top_k_eigenvectors(const Tensor& gram, std::size_t k);

}  // namespace seqforge

#endif

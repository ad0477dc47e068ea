#ifndef SEQFORGE_GRAD_CHECK_HPP
#define SEQFORGE_GRAD_CHECK_HPP

#include <functional>
#include <vector>

#include "seqforge/tensor.hpp"

namespace seqforge {

struct GradCheckResult {
    double max_rel_error = 0.0;
    // Location of the worst (or first non-finite) entry.
    std::size_t param_index = 0;
    std::size_t entry_index = 0;
    bool finite = true;  // false when a perturbed evaluation went non-finite

    bool passed(double tol) const { return finite && max_rel_error < tol; }
};

/// Scalar loss over a set of parameter tensors. When `grads` is non-null the
/// callee must fill one gradient tensor per parameter (the analytic path
/// under test); when null only the value is needed.
using LossFn = std::function<double(const std::vector<Tensor>& params,
                                    std::vector<Tensor>* grads)>;

/// Compares analytic gradients against central finite differences.
/// Returns max over all parameter entries of
///   |analytic - numeric| / max(1, |numeric|).
GradCheckResult grad_check(const LossFn& loss, std::vector<Tensor> params, double epsilon);

}  // namespace seqforge

#endif

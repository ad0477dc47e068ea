#include "seqforge/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace seqforge {

GradCheckResult grad_check(const LossFn& loss, std::vector<Tensor> params, double epsilon) {
    if (epsilon < 1e-7 || epsilon > 1e-3)
        throw std::invalid_argument("grad_check: epsilon outside [1e-7, 1e-3]");

    std::vector<Tensor> analytic;
    loss(params, &analytic);
    if (analytic.size() != params.size())
        throw std::logic_error("grad_check: loss returned wrong gradient count");

    GradCheckResult res;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].numel(); ++i) {
            const double saved = params[p][i];
            params[p][i] = saved + epsilon;
            const double up = loss(params, nullptr);
            params[p][i] = saved - epsilon;
            const double down = loss(params, nullptr);
            params[p][i] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                res.finite = false;
                res.param_index = p;
                res.entry_index = i;
                return res;
            }
            const double numeric = (up - down) / (2.0 * epsilon);
            const double rel =
                std::abs(analytic[p][i] - numeric) / std::max(1.0, std::abs(numeric));
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.param_index = p;
                res.entry_index = i;
            }
        }
    }
    return res;
}

}  // namespace seqforge

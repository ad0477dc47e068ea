#include "seqforge/tensor.hpp"

#include <cmath>

namespace seqforge {

bool Tensor::all_finite() const {
    for (double x : values_)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape_[i]);
    }
    s += ")";
    return s;
}

}  // namespace seqforge

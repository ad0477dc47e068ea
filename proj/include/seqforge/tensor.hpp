#ifndef SEQFORGE_TENSOR_HPP
#define SEQFORGE_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqforge {

/// Dense row-major tensor of 64-bit floats. Rank 0 denotes a scalar.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), values_(numel_of(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> values)
        : shape_(std::move(shape)), values_(std::move(values)) {
        if (values_.size() != numel_of(shape_))
            throw std::invalid_argument("Tensor: shape/value size mismatch");
    }

    static Tensor scalar(double v) {
        Tensor t{std::vector<std::size_t>{}};
        t.values_ = {v};
        return t;
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::size_t> shape, double v) {
        Tensor t(std::move(shape));
        for (auto& x : t.values_) x = v;
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return values_.size(); }

    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    /// Row/column accessors for the common rank-2 case.
    std::size_t rows() const { return rank() == 0 ? 1 : shape_[0]; }
    std::size_t cols() const {
        if (rank() <= 1) return rank() == 0 ? 1 : shape_[0];
        std::size_t c = 1;
        for (std::size_t i = 1; i < rank(); ++i) c *= shape_[i];
        return c;
    }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

    double item() const {
        if (values_.size() != 1) throw std::logic_error("Tensor::item on non-scalar");
        return values_[0];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    void fill(double v) {
        for (auto& x : values_) x = v;
    }

    bool all_finite() const;

    std::string shape_str() const;

    static std::size_t numel_of(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_{0.0};
};

}  // namespace seqforge

#endif

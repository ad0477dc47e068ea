#include "seqforge/params.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace seqforge {

std::size_t ParamStore::add(std::string name, Tensor init) {
    if (index_.count(name)) throw std::logic_error("duplicate parameter: " + name);
    Entry e;
    e.name = std::move(name);
    e.value = std::move(init);
    entries_.push_back(std::move(e));
    index_[entries_.back().name] = entries_.size() - 1;
    return entries_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::logic_error("unknown parameter: " + name);
    return it->second;
}

std::vector<NodeId> ParamStore::bind(Graph& g, bool trainable) const {
    std::vector<NodeId> ids;
    ids.reserve(entries_.size());
    for (const auto& e : entries_)
        ids.push_back(trainable ? g.leaf(e.value) : g.constant(e.value));
    return ids;
}

std::uint64_t ParamStore::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : entries_) {
        for (double v : e.value.values()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            h ^= bits;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

void AdamOptimizer::step(ParamStore& params, Graph& g, const std::vector<NodeId>& bound) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& e = params.entry(i);
        const Tensor& grad = g.grad(bound[i]);
        if (e.moment1.numel() != e.value.numel()) {
            e.moment1 = Tensor::zeros(e.value.shape());
            e.moment2 = Tensor::zeros(e.value.shape());
        }
        for (std::size_t j = 0; j < e.value.numel(); ++j) {
            const double gj = grad[j];
            e.moment1[j] = beta1_ * e.moment1[j] + (1.0 - beta1_) * gj;
            e.moment2[j] = beta2_ * e.moment2[j] + (1.0 - beta2_) * gj * gj;
            const double mhat = e.moment1[j] / bc1;
            const double vhat = e.moment2[j] / bc2;
            e.value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace seqforge

#ifndef SEQFORGE_PARAMS_HPP
#define SEQFORGE_PARAMS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seqforge/graph.hpp"
#include "seqforge/tensor.hpp"

namespace seqforge {

/// Named trainable tensors with their optimizer moments, in a stable order.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor moment1;  // Adam first moment, sized on first step
        Tensor moment2;
    };

    std::size_t add(std::string name, Tensor init);

    std::size_t index_of(const std::string& name) const;
    Tensor& value(std::size_t i) { return entries_[i].value; }
    const Tensor& value(std::size_t i) const { return entries_[i].value; }
    Tensor& value(const std::string& name) { return entries_[index_of(name)].value; }
    const Tensor& value(const std::string& name) const { return entries_[index_of(name)].value; }
    Entry& entry(std::size_t i) { return entries_[i]; }
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    std::size_t size() const { return entries_.size(); }

    /// Registers every parameter on the graph. Trainable parameters become
    /// differentiable leaves; frozen ones become constants.
    std::vector<NodeId> bind(Graph& g, bool trainable) const;

    /// Order-stable digest of all values; used to prove a network did not
    /// change during the other network's phase.
    std::uint64_t checksum() const;

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

/// Adaptive per-parameter step-size update from first/second gradient moment
/// estimates, with bias correction.
class AdamOptimizer {
public:
    explicit AdamOptimizer(double learning_rate) : lr_(learning_rate) {}

    /// Applies one update from the gradients accumulated on `bound` nodes.
    void step(ParamStore& params, Graph& g, const std::vector<NodeId>& bound);

    void reset() { t_ = 0; }

private:
    double lr_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::int64_t t_ = 0;
};

}  // namespace seqforge

#endif

#include "seqforge/nn.hpp"

#include <cmath>

namespace seqforge {

CellState lstm_cell(Graph& g, NodeId input, CellState prev, NodeId w, NodeId u, NodeId b,
                    std::size_t hidden) {
    NodeId z = g.affine(input, w, prev.h, u, b);
    NodeId in_gate = g.gate(z, 0, hidden, Activation::Sigmoid);
    NodeId forget = g.gate(z, hidden, hidden, Activation::Sigmoid);
    NodeId cand = g.gate(z, 2 * hidden, hidden, Activation::Tanh);
    NodeId out_gate = g.gate(z, 3 * hidden, hidden, Activation::Sigmoid);
    NodeId c = g.add(g.mul(forget, prev.c), g.mul(in_gate, cand));
    NodeId h = g.mul(out_gate, g.activate(c, Activation::Tanh));
    return {h, c};
}

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    Tensor t({fan_in, fan_out});
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& x : t.values()) x = rng.uniform(-r, r);
    return t;
}

Tensor lstm_bias(std::size_t hidden) {
    Tensor b({4 * hidden});
    for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;
    return b;
}

Tensor small_vector(std::size_t n, Rng& rng) {
    Tensor t({n});
    const double r = std::sqrt(3.0 / static_cast<double>(n));
    for (auto& x : t.values()) x = rng.uniform(-r, r);
    return t;
}

}  // namespace seqforge

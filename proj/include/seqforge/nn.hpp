#ifndef SEQFORGE_NN_HPP
#define SEQFORGE_NN_HPP

#include <cstddef>

#include "seqforge/graph.hpp"
#include "seqforge/rng.hpp"

namespace seqforge {

struct CellState {
    NodeId h = -1;
    NodeId c = -1;
};

/// One gated-memory recurrent step. Pre-activation layout is [input, forget,
/// candidate, output], each `hidden` wide.
CellState lstm_cell(Graph& g, NodeId input, CellState prev, NodeId w, NodeId u, NodeId b,
                    std::size_t hidden);

/// Scaled uniform (Glorot) initialization.
Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Recurrent-cell bias with the forget-gate block at 1.
Tensor lstm_bias(std::size_t hidden);

Tensor small_vector(std::size_t n, Rng& rng);

}  // namespace seqforge

#endif

#ifndef SEQFORGE_INTERPRETER_HPP
#define SEQFORGE_INTERPRETER_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "seqforge/data.hpp"
#include "seqforge/eig.hpp"
#include "seqforge/graph.hpp"
#include "seqforge/params.hpp"

namespace seqforge {

/// A batch of padded sequences laid out per-timestep for recurrent
/// processing. Rows index sequences (B1 of them), each (L, F).
struct SequenceBatch {
    std::size_t rows = 0;   // B1
    std::size_t steps = 0;  // L
    std::size_t width = 0;  // F
    std::vector<Tensor> x;            // per timestep: (rows, width)
    std::vector<std::size_t> valid;   // valid length per row

    /// (rows,1) recurrent-update mask for timestep t: a row updates while
    /// t < max(valid, 1), so all-zero sequences still take timestep 0.
    Tensor step_mask(std::size_t t) const;
    /// (rows, steps) attention mask over encoder timesteps.
    Tensor attention_mask() const;
    /// (rows, width) reconstruction weights for timestep t:
    /// 1/(rows * valid * width) on valid cells, 0 on padding.
    Tensor recon_weights(std::size_t t) const;
};

/// Builds a batch from padded sequences (all must share (L, F)).
SequenceBatch make_batch(const std::vector<const GameSequence*>& sequences);

struct InterpreterConfig {
    std::size_t input_width = 0;                     // F
    std::array<std::size_t, 3> hidden = {64, 32, 16};
    std::size_t attention_dim = 16;

    std::size_t latent_dim() const { return hidden[0] + hidden[1] + hidden[2]; }
};

/// Stacked three-layer recurrent encoder with a mirrored attention decoder.
/// The latent representation of a sequence is the concatenation of all three
/// layers' hidden states at its last valid timestep.
class InterpreterModel {
public:
    InterpreterModel(InterpreterConfig cfg, std::uint64_t seed);

    const InterpreterConfig& config() const { return cfg_; }
    std::size_t latent_dim() const { return cfg_.latent_dim(); }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    struct EncodeResult {
        NodeId latent = -1;                                  // (B1, M)
        std::array<std::vector<NodeId>, 3> layer_outputs;    // per layer, per t
        std::array<NodeId, 3> final_h = {-1, -1, -1};
    };

    EncodeResult encode(Graph& g, const std::vector<NodeId>& bound,
                        const SequenceBatch& batch) const;

    /// Autoregressive decode for L steps; each decoder layer consumes an
    /// additive-attention context over the matching encoder layer's outputs.
    /// Returns the per-timestep reconstructions (B1, F).
    std::vector<NodeId> decode(Graph& g, const std::vector<NodeId>& bound,
                               const EncodeResult& enc, const SequenceBatch& batch) const;

    /// Convenience: encode with frozen weights and return the latent values.
    Tensor encode_values(const SequenceBatch& batch) const;

private:
    InterpreterConfig cfg_;
    ParamStore params_;

    struct LayerIdx {
        std::size_t w, u, b;
    };
    std::array<LayerIdx, 3> enc_idx_{};
    std::array<LayerIdx, 3> dec_idx_{};
    struct AttIdx {
        std::size_t wd, we, b, v;
    };
    std::array<AttIdx, 3> att_idx_{};
    std::size_t out_w_ = 0, out_b_ = 0;

};

/// Masked mean-squared reconstruction error (Eq-style 1/L over the valid
/// length and all features, then mean over the batch rows).
NodeId reconstruction_loss(Graph& g, const std::vector<NodeId>& outputs,
                           const SequenceBatch& batch);

/// Spectral-relaxation clustering residual: Tr(G) - Tr(F^T G F) with
/// G the Gram matrix of the latent rows. Gradients flow through the latent
/// only; the indicator is held constant.
NodeId trace_loss(Graph& g, NodeId latent, const ClusterIndicator& indicator);

}  // namespace seqforge

#endif

#include "seqforge/interpreter.hpp"

#include <cmath>
#include <stdexcept>

#include "seqforge/errors.hpp"
#include "seqforge/nn.hpp"
#include "seqforge/rng.hpp"

namespace seqforge {

Tensor SequenceBatch::step_mask(std::size_t t) const {
    Tensor m({rows, 1});
    for (std::size_t r = 0; r < rows; ++r)
        m[r] = t < std::max<std::size_t>(valid[r], 1) ? 1.0 : 0.0;
    return m;
}

Tensor SequenceBatch::attention_mask() const {
    Tensor m({rows, steps});
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t v = std::max<std::size_t>(valid[r], 1);
        for (std::size_t t = 0; t < steps; ++t) m.at(r, t) = t < v ? 1.0 : 0.0;
    }
    return m;
}

Tensor SequenceBatch::recon_weights(std::size_t t) const {
    Tensor w({rows, width});
    for (std::size_t r = 0; r < rows; ++r) {
        if (t >= valid[r]) continue;
        const double scale =
            1.0 / (static_cast<double>(rows) * static_cast<double>(valid[r]) *
                   static_cast<double>(width));
        for (std::size_t f = 0; f < width; ++f) w.at(r, f) = scale;
    }
    return w;
}

SequenceBatch make_batch(const std::vector<const GameSequence*>& sequences) {
    if (sequences.empty()) throw std::invalid_argument("make_batch: empty");
    SequenceBatch b;
    b.rows = sequences.size();
    b.steps = sequences[0]->padded.dim(0);
    b.width = sequences[0]->padded.dim(1);
    b.valid.reserve(b.rows);
    for (const auto* s : sequences) {
        if (s->padded.dim(0) != b.steps || s->padded.dim(1) != b.width)
            throw std::invalid_argument("make_batch: inconsistent padded shapes");
        b.valid.push_back(s->valid_length);
    }
    b.x.reserve(b.steps);
    for (std::size_t t = 0; t < b.steps; ++t) {
        Tensor xt({b.rows, b.width});
        for (std::size_t r = 0; r < b.rows; ++r)
            for (std::size_t f = 0; f < b.width; ++f) xt.at(r, f) = sequences[r]->padded.at(t, f);
        b.x.push_back(std::move(xt));
    }
    return b;
}

InterpreterModel::InterpreterModel(InterpreterConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg_.input_width == 0) throw std::invalid_argument("interpreter: input width required");
    Rng rng(Rng::mix(seed, "interpreter-init"));
    const auto& m = cfg_.hidden;
    const std::size_t F = cfg_.input_width;
    const std::size_t A = cfg_.attention_dim;

    const std::size_t enc_in[3] = {F, m[0], m[1]};
    for (int l = 0; l < 3; ++l) {
        const std::string tag = "enc" + std::to_string(l + 1);
        enc_idx_[l].w = params_.add(tag + "_W", glorot(enc_in[l], 4 * m[l], rng));
        enc_idx_[l].u = params_.add(tag + "_U", glorot(m[l], 4 * m[l], rng));
        enc_idx_[l].b = params_.add(tag + "_b", lstm_bias(m[l]));
    }
    // Decoder layer l consumes [previous layer's output (or the previous
    // reconstructed frame); attention context over encoder layer l; the
    // layer's slice of the latent representation, fed at every step so the
    // latent stays load-bearing across long sequences].
    const std::size_t dec_in[3] = {F + 2 * m[0], m[0] + 2 * m[1], m[1] + 2 * m[2]};
    for (int l = 0; l < 3; ++l) {
        const std::string tag = "dec" + std::to_string(l + 1);
        dec_idx_[l].w = params_.add(tag + "_W", glorot(dec_in[l], 4 * m[l], rng));
        dec_idx_[l].u = params_.add(tag + "_U", glorot(m[l], 4 * m[l], rng));
        dec_idx_[l].b = params_.add(tag + "_b", lstm_bias(m[l]));
    }
    for (int l = 0; l < 3; ++l) {
        const std::string tag = "att" + std::to_string(l + 1);
        att_idx_[l].wd = params_.add(tag + "_Wd", glorot(m[l], A, rng));
        att_idx_[l].we = params_.add(tag + "_We", glorot(m[l], A, rng));
        att_idx_[l].b = params_.add(tag + "_b", Tensor({A}));
        att_idx_[l].v = params_.add(tag + "_v", small_vector(A, rng));
    }
    out_w_ = params_.add("out_W", glorot(m[2], F, rng));
    out_b_ = params_.add("out_b", Tensor({F}));
}

InterpreterModel::EncodeResult InterpreterModel::encode(Graph& g,
                                                        const std::vector<NodeId>& bound,
                                                        const SequenceBatch& batch) const {
    if (batch.width != cfg_.input_width)
        throw std::invalid_argument("encode: batch width differs from model input width");
    const auto& m = cfg_.hidden;
    EncodeResult res;

    std::array<CellState, 3> state;
    for (int l = 0; l < 3; ++l) {
        NodeId zero = g.constant(Tensor({batch.rows, m[l]}));
        state[l] = {zero, zero};
        res.layer_outputs[l].reserve(batch.steps);
    }

    for (std::size_t t = 0; t < batch.steps; ++t) {
        const Tensor mask = batch.step_mask(t);
        NodeId input = g.constant(batch.x[t]);
        for (int l = 0; l < 3; ++l) {
            CellState next =
                lstm_cell(g, input, state[l], bound[enc_idx_[l].w], bound[enc_idx_[l].u],
                          bound[enc_idx_[l].b], m[l]);
            NodeId h_masked = g.masked_blend(next.h, state[l].h, mask);
            NodeId c_masked = g.masked_blend(next.c, state[l].c, mask);
            state[l] = {h_masked, c_masked};
            res.layer_outputs[l].push_back(h_masked);
            input = h_masked;
        }
    }
    for (int l = 0; l < 3; ++l) res.final_h[l] = state[l].h;
    res.latent = g.concat_cols({state[0].h, state[1].h, state[2].h});
    return res;
}

std::vector<NodeId> InterpreterModel::decode(Graph& g, const std::vector<NodeId>& bound,
                                             const EncodeResult& enc,
                                             const SequenceBatch& batch) const {
    const auto& m = cfg_.hidden;
    const Tensor att_mask = batch.attention_mask();

    // Per-layer encoder projections for the attention score, computed once.
    std::array<std::vector<NodeId>, 3> proj;
    for (int l = 0; l < 3; ++l) {
        proj[l].reserve(batch.steps);
        for (std::size_t t = 0; t < batch.steps; ++t)
            proj[l].push_back(g.matmul(enc.layer_outputs[l][t], bound[att_idx_[l].we]));
    }

    std::array<CellState, 3> state;
    for (int l = 0; l < 3; ++l)
        state[l] = {enc.final_h[l], g.constant(Tensor({batch.rows, m[l]}))};

    std::vector<NodeId> outputs;
    outputs.reserve(batch.steps);
    NodeId prev_frame = g.constant(Tensor({batch.rows, batch.width}));
    for (std::size_t t = 0; t < batch.steps; ++t) {
        NodeId input = prev_frame;
        for (int l = 0; l < 3; ++l) {
            NodeId ctx = g.attention(state[l].h, bound[att_idx_[l].wd], bound[att_idx_[l].b],
                                     bound[att_idx_[l].v], proj[l], enc.layer_outputs[l],
                                     att_mask);
            NodeId cell_in = g.concat_cols({input, ctx, enc.final_h[l]});
            state[l] = lstm_cell(g, cell_in, state[l], bound[dec_idx_[l].w],
                                 bound[dec_idx_[l].u], bound[dec_idx_[l].b], m[l]);
            input = state[l].h;
        }
        NodeId frame = g.linear(state[2].h, bound[out_w_], bound[out_b_]);
        outputs.push_back(frame);
        prev_frame = frame;  // no teacher forcing
    }
    return outputs;
}

Tensor InterpreterModel::encode_values(const SequenceBatch& batch) const {
    Graph g;
    auto bound = params_.bind(g, /*trainable=*/false);
    auto res = encode(g, bound, batch);
    return g.value(res.latent);
}

NodeId reconstruction_loss(Graph& g, const std::vector<NodeId>& outputs,
                           const SequenceBatch& batch) {
    std::vector<NodeId> terms;
    terms.reserve(outputs.size());
    for (std::size_t t = 0; t < outputs.size(); ++t)
        terms.push_back(g.weighted_sq_error(outputs[t], batch.x[t], batch.recon_weights(t)));
    return g.add_scalars(terms);
}

NodeId trace_loss(Graph& g, NodeId latent, const ClusterIndicator& indicator) {
    const Tensor& lv = g.value(latent);
    if (indicator.matrix.dim(0) != lv.dim(0))
        throw std::invalid_argument("trace_loss: indicator rows must match batch rows");
    NodeId f = g.constant(indicator.matrix);
    NodeId projected = g.matmul(latent, f, /*trans_a=*/true);  // (M, K)
    return g.sub(g.sum_squares(latent), g.sum_squares(projected));
}

}  // namespace seqforge

#ifndef SEQFORGE_GRAPH_HPP
#define SEQFORGE_GRAPH_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "seqforge/tensor.hpp"

namespace seqforge {

using NodeId = std::int32_t;

enum class Activation { Sigmoid, Tanh, Relu, Identity };

/// Reverse-mode automatic differentiation over an explicit operation graph.
///
/// Forward values are computed eagerly as ops are recorded; backward() walks
/// the tape in reverse creation order (which is always a valid topological
/// order) and accumulates gradients into every node that requires them.
/// Graphs are single-use: build, backward, read gradients, discard.
class Graph {
public:
    Graph() { nodes_.reserve(4096); }

    // ---- leaves ------------------------------------------------------------

    /// Constant input; no gradient is tracked through it.
    NodeId constant(Tensor v);

    /// Differentiable leaf (a model parameter or an input under test).
    NodeId leaf(Tensor v);

    // ---- elementwise -------------------------------------------------------

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    /// Elementwise product. If b has shape (rows,1) it broadcasts across the
    /// columns of a.
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId activate(NodeId a, Activation act);

    // ---- linear algebra ----------------------------------------------------

    /// Matrix product with optional transposes; operands are rank-2 (or
    /// rank-1, treated as a single row / column as dimensions demand).
    NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);

    /// x·W + h·U + b  (b broadcasts across rows). The fused recurrent-cell
    /// pre-activation; saves two intermediate tensors per cell.
    NodeId affine(NodeId x, NodeId w, NodeId h, NodeId u, NodeId b);

    /// x·W + b.
    NodeId linear(NodeId x, NodeId w, NodeId b);

    /// Column slice [offset, offset+width) of a rank-2 node, with an
    /// activation applied. Used to split fused gate pre-activations.
    NodeId gate(NodeId z, std::size_t offset, std::size_t width, Activation act);

    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId slice_rows(NodeId a, std::size_t offset, std::size_t count);
    /// Same data, new shape (numel must match).
    NodeId reshape(NodeId a, std::vector<std::size_t> shape);

    // ---- reductions & losses -----------------------------------------------

    NodeId sum_squares(NodeId a);                     // scalar: sum(a*a)
    NodeId mean_sq_error(NodeId a, NodeId b);         // scalar: mean((a-b)^2)
    /// Scalar: sum(w * (a - t)^2) with constant weights/target.
    NodeId weighted_sq_error(NodeId a, Tensor target, Tensor weights);
    NodeId add_scalars(const std::vector<NodeId>& scalars);

    /// Row-wise softmax over the last dimension (vector input = one row).
    NodeId softmax(NodeId a);

    /// Batch-mean categorical cross entropy: -log(max(p[label], floor)) with
    /// p = softmax(logits). Fused for numerical stability.
    NodeId cross_entropy(NodeId logits, const std::vector<int>& labels);

    // ---- structured ops ----------------------------------------------------

    /// mask*cur + (1-mask)*prev with a constant (rows,1) mask. Keeps a
    /// recurrent state frozen on rows whose sequence has ended.
    NodeId masked_blend(NodeId cur, NodeId prev, Tensor mask);

    /// (S,M) -> (S,S) matrix of pairwise cosine similarities between rows.
    /// Rows with norm below 1e-12 get similarity 0 to every other row and 1
    /// to themselves, with zero gradient.
    NodeId cosine_matrix(NodeId a);

    /// Additive attention, fused. Query q (B,m_dec) against per-timestep
    /// encoder projections proj[t] (B,a) with raw encoder outputs enc[t]
    /// (B,m). score[b,t] = v . tanh(q W_d + bias + proj[t]); weights are a
    /// masked softmax over t; returns sum_t weight[:,t] * enc[t].
    /// `mask` is (B,T): 1 for attendable timesteps.
    NodeId attention(NodeId query, NodeId w_query, NodeId bias, NodeId v,
                     const std::vector<NodeId>& proj, const std::vector<NodeId>& enc,
                     Tensor mask);

    /// 3x3 same-padding convolution. x: (B, C_in, H, W), w: (C_out, C_in, 9),
    /// b: (C_out). Returns (B, C_out, H, W) with ReLU applied when `relu`.
    NodeId conv3x3(NodeId x, NodeId w, NodeId b, bool relu);

    // ---- execution ---------------------------------------------------------

    void backward(NodeId root);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    /// Gradient accumulated for the node; allocates zeros if nothing flowed.
    const Tensor& grad(NodeId id) { return grad_buf(id); }
    bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_set = false;
        std::function<void(Graph&)> back;
    };

    std::vector<Node> nodes_;

    NodeId push(Tensor value, bool requires_grad, std::function<void(Graph&)> back);
    Tensor& grad_buf(NodeId id);
    void ensure_scalar(NodeId id, const char* what) const;
};

}  // namespace seqforge

#endif

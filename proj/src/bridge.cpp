#include "seqforge/bridge.hpp"

#include <stdexcept>

namespace seqforge {

Tensor sign_matrix(const std::vector<int>& cluster_ids) {
    const std::size_t s = cluster_ids.size();
    Tensor sign({s, s});
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j)
            sign.at(i, j) = (i != j && cluster_ids[i] != cluster_ids[j]) ? 1.0 : -1.0;
    return sign;
}

NodeId magnitude(Graph& g, NodeId player_latents) { return g.cosine_matrix(player_latents); }

NodeId reduce_irl(Graph& g, NodeId irl, NodeId reducer_weights) {
    const Tensor& v = g.value(irl);
    if (v.rank() != 2 || v.dim(0) != v.dim(1))
        throw std::invalid_argument("reduce_irl: expected square IRL matrix");
    if (g.value(reducer_weights).numel() != v.dim(0))
        throw std::invalid_argument("reduce_irl: reducer weights must have length S");
    NodeId scores = g.matmul(irl, reducer_weights);  // (S,)
    return g.softmax(scores);
}

NodeId bridge_loss(Graph& g, const Tensor& classifier_penultimate, NodeId reduced) {
    if (classifier_penultimate.numel() != g.value(reduced).numel())
        throw std::invalid_argument("bridge_loss: length mismatch");
    return g.mean_sq_error(g.constant(classifier_penultimate), reduced);
}

NodeId interpreter_total_loss(Graph& g, NodeId recon, NodeId trace, NodeId bridge, double beta,
                              double lambda) {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("interpreter loss: beta in [0,1]");
    if (lambda < 0.0) throw std::invalid_argument("interpreter loss: lambda >= 0");
    NodeId clustering = g.add_scalars({recon, g.scale(trace, lambda / 2.0)});
    if (bridge < 0) return clustering;
    return g.add_scalars({g.scale(clustering, beta), g.scale(bridge, 1.0 - beta)});
}

double interpreter_total_loss_value(double recon, double trace, double bridge, bool bridge_active,
                                    double beta, double lambda) {
    const double clustering = recon + (lambda / 2.0) * trace;
    if (!bridge_active) return clustering;
    return beta * clustering + (1.0 - beta) * bridge;
}

}  // namespace seqforge

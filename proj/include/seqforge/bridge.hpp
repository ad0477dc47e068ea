#ifndef SEQFORGE_BRIDGE_HPP
#define SEQFORGE_BRIDGE_HPP

#include <vector>

#include "seqforge/graph.hpp"
#include "seqforge/tensor.hpp"

namespace seqforge {

/// Penalty/reward sign matrix over one player's S sequences: +1 where the
/// cluster ids differ (i != j), -1 otherwise (including the diagonal).
/// Constant with respect to all gradients.
Tensor sign_matrix(const std::vector<int>& cluster_ids);

/// (S, S) cosine-similarity matrix over the player's latent rows.
/// Differentiable with respect to the latents.
NodeId magnitude(Graph& g, NodeId player_latents);

/// Reduces the (S, S) directional matrix to an (S,) distribution: each row
/// is projected to a scalar by the shared length-S reducer weights, then a
/// softmax runs across the S row scores.
NodeId reduce_irl(Graph& g, NodeId irl, NodeId reducer_weights);

/// Feature-matching term: (1/S) * sum((C_relu - reduced)^2) for one player.
/// The classifier activations arrive as constants (classifier frozen in this
/// step); gradients flow into the latents and reducer weights only.
NodeId bridge_loss(Graph& g, const Tensor& classifier_penultimate, NodeId reduced);

/// Combined interpreter objective:
///   beta * (recon + (lambda/2) * trace) + (1 - beta) * bridge.
/// Pass bridge = -1 when the bridge is inactive (first collaborative epoch);
/// the loss is then exactly recon + (lambda/2) * trace.
NodeId interpreter_total_loss(Graph& g, NodeId recon, NodeId trace, NodeId bridge, double beta,
                              double lambda);

double interpreter_total_loss_value(double recon, double trace, double bridge, bool bridge_active,
                                    double beta, double lambda);

}  // namespace seqforge

#endif

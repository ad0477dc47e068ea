#ifndef SEQFORGE_CLASSIFIER_HPP
#define SEQFORGE_CLASSIFIER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "seqforge/graph.hpp"
#include "seqforge/params.hpp"
#include "seqforge/tensor.hpp"

namespace seqforge {

/// K x K counts of consecutive-sequence cluster moves for one player, with a
/// globally normalized (heat-map style) float view.
struct TransitionMatrix {
    Tensor counts;      // (K, K), integer-valued
    Tensor normalized;  // (K, K), sums to 1 when any transition exists
    std::size_t total = 0;
};

/// Counts transitions between consecutive real sequences. Padded sequences
/// (marked by `real[i] == false`) break the chain: a transition is counted
/// only when both endpoints are real.
TransitionMatrix build_adjacency(const std::vector<int>& cluster_ids,
                                 const std::vector<bool>& real, std::size_t k);

/// Approach-2 mapping: the (S, M) latent rows in original order (identity).
Tensor map_sequential(const Tensor& latents);

/// Approach-3 mapping: normalized cluster-frequency histogram over real
/// sequences. Throws DataError if every sequence is padded.
Tensor map_frequency(const std::vector<int>& cluster_ids, const std::vector<bool>& real,
                     std::size_t k);

enum class ClassifierVariant { TransitionMatrix, Sequential, Frequency };

ClassifierVariant variant_from_string(const std::string& s);  // "tm" | "s" | "f"
const char* variant_to_string(ClassifierVariant v);

struct ClassifierConfig {
    ClassifierVariant variant = ClassifierVariant::TransitionMatrix;
    std::size_t k = 7;             // clusters (TM / frequency input width)
    std::size_t seq_count = 0;     // S; also the penultimate width
    std::size_t latent_dim = 0;    // M (sequential variant input width)
    std::size_t classes = 3;       // C
    std::size_t conv_channels = 8;
    std::size_t recurrent_hidden = 24;

    std::size_t penultimate_width() const { return seq_count; }
};

struct ClassifierActivations {
    Tensor penultimate;    // (S,) non-negative
    Tensor logits;         // (C,)
    Tensor probabilities;  // (C,), sums to 1
    int predicted = 0;
};

/// The supervised network. All variants funnel through a dense layer of S
/// units with ReLU (the penultimate exposed to the bridge) and a dense layer
/// to C logits:
///   TM: two 3x3 same-padding conv+ReLU stages over the K x K heat map;
///   S:  one recurrent layer over the (S, M) latent sequence;
///   F:  dense K -> S.
class ClassifierModel {
public:
    ClassifierModel(ClassifierConfig cfg, std::uint64_t seed);

    const ClassifierConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    struct ForwardNodes {
        NodeId penultimate = -1;  // (B, S)
        NodeId logits = -1;       // (B, C)
    };

    /// Batched forward pass. Every input tensor must match the variant's
    /// expected shape: TM (K, K), S (S, M), F (K,).
    ForwardNodes forward(Graph& g, const std::vector<NodeId>& bound,
                         const std::vector<const Tensor*>& inputs) const;

    /// Single-sample convenience on frozen weights.
    ClassifierActivations activations(const Tensor& input) const;

private:
    ClassifierConfig cfg_;
    ParamStore params_;

    // parameter indices (populated per variant)
    std::size_t conv1_w_ = 0, conv1_b_ = 0, conv2_w_ = 0, conv2_b_ = 0;
    std::size_t rec_w_ = 0, rec_u_ = 0, rec_b_ = 0;
    std::size_t dense_w_ = 0, dense_b_ = 0;  // -> S penultimate
    std::size_t head_w_ = 0, head_b_ = 0;    // -> C logits

    void check_input(const Tensor& t) const;
};

/// Batch-mean categorical cross entropy over logits.
NodeId cce_loss(Graph& g, NodeId logits, const std::vector<int>& labels);

/// Plain value-level cross entropy for reporting: -log(max(p[label], 1e-12)).
double cce_value(const Tensor& probabilities, int label);

}  // namespace seqforge

#endif

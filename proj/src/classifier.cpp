#include "seqforge/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seqforge/errors.hpp"
#include "seqforge/nn.hpp"

namespace seqforge {

TransitionMatrix build_adjacency(const std::vector<int>& cluster_ids,
                                 const std::vector<bool>& real, std::size_t k) {
    if (real.size() != cluster_ids.size())
        throw std::invalid_argument("build_adjacency: real flags size mismatch");
    TransitionMatrix tm;
    tm.counts = Tensor({k, k});
    tm.normalized = Tensor({k, k});
    for (std::size_t i = 0; i < cluster_ids.size(); ++i) {
        if (!real[i]) continue;
        if (cluster_ids[i] < 0 || static_cast<std::size_t>(cluster_ids[i]) >= k)
            throw std::invalid_argument("build_adjacency: cluster id out of range");
    }
    for (std::size_t i = 0; i + 1 < cluster_ids.size(); ++i) {
        if (!real[i] || !real[i + 1]) continue;
        tm.counts.at(cluster_ids[i], cluster_ids[i + 1]) += 1.0;
        ++tm.total;
    }
    if (tm.total > 0) {
        for (std::size_t i = 0; i < k * k; ++i)
            tm.normalized[i] = tm.counts[i] / static_cast<double>(tm.total);
    }
    return tm;
}

Tensor map_sequential(const Tensor& latents) { return latents; }

Tensor map_frequency(const std::vector<int>& cluster_ids, const std::vector<bool>& real,
                     std::size_t k) {
    Tensor hist({k});
    std::size_t total = 0;
    for (std::size_t i = 0; i < cluster_ids.size(); ++i) {
        if (!real[i]) continue;
        if (cluster_ids[i] < 0 || static_cast<std::size_t>(cluster_ids[i]) >= k)
            throw std::invalid_argument("map_frequency: cluster id out of range");
        hist[cluster_ids[i]] += 1.0;
        ++total;
    }
    if (total == 0) throw DataError("map_frequency: all sequences are padded");
    for (auto& v : hist.values()) v /= static_cast<double>(total);
    return hist;
}

ClassifierVariant variant_from_string(const std::string& s) {
    if (s == "tm") return ClassifierVariant::TransitionMatrix;
    if (s == "s") return ClassifierVariant::Sequential;
    if (s == "f") return ClassifierVariant::Frequency;
    throw ConfigError("unknown classifier variant '" + s + "' (expected tm, s, or f)");
}

const char* variant_to_string(ClassifierVariant v) {
    switch (v) {
        case ClassifierVariant::TransitionMatrix: return "tm";
        case ClassifierVariant::Sequential: return "s";
        case ClassifierVariant::Frequency: return "f";
    }
    return "tm";
}

ClassifierModel::ClassifierModel(ClassifierConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg_.seq_count == 0) throw std::invalid_argument("classifier: seq_count (S) required");
    Rng rng(Rng::mix(seed, "classifier-init"));
    const std::size_t S = cfg_.seq_count;
    const std::size_t C = cfg_.classes;

    std::size_t dense_in = 0;
    switch (cfg_.variant) {
        case ClassifierVariant::TransitionMatrix: {
            const std::size_t ch = cfg_.conv_channels;
            Tensor w1({ch, 1, 9});
            {
                const double r = std::sqrt(6.0 / (9.0 + 9.0 * ch));
                for (auto& x : w1.values()) x = rng.uniform(-r, r);
            }
            conv1_w_ = params_.add("conv1_W", std::move(w1));
            conv1_b_ = params_.add("conv1_b", Tensor({ch}));
            Tensor w2({ch, ch, 9});
            {
                const double r = std::sqrt(6.0 / (9.0 * ch + 9.0 * ch));
                for (auto& x : w2.values()) x = rng.uniform(-r, r);
            }
            conv2_w_ = params_.add("conv2_W", std::move(w2));
            conv2_b_ = params_.add("conv2_b", Tensor({ch}));
            dense_in = ch * cfg_.k * cfg_.k;
            break;
        }
        case ClassifierVariant::Sequential: {
            const std::size_t h = cfg_.recurrent_hidden;
            if (cfg_.latent_dim == 0)
                throw std::invalid_argument("classifier: latent_dim required for variant s");
            rec_w_ = params_.add("rec_W", glorot(cfg_.latent_dim, 4 * h, rng));
            rec_u_ = params_.add("rec_U", glorot(h, 4 * h, rng));
            rec_b_ = params_.add("rec_b", lstm_bias(h));
            dense_in = h;
            break;
        }
        case ClassifierVariant::Frequency: {
            dense_in = cfg_.k;
            break;
        }
    }
    dense_w_ = params_.add("dense_W", glorot(dense_in, S, rng));
    dense_b_ = params_.add("dense_b", Tensor({S}));
    // Zero-initialized head: an untrained classifier emits uniform
    // probabilities regardless of the feature path.
    head_w_ = params_.add("head_W", Tensor({S, C}));
    head_b_ = params_.add("head_b", Tensor({C}));
}

void ClassifierModel::check_input(const Tensor& t) const {
    switch (cfg_.variant) {
        case ClassifierVariant::TransitionMatrix:
            if (t.rank() != 2 || t.dim(0) != cfg_.k || t.dim(1) != cfg_.k)
                throw std::invalid_argument("classifier: expected (K, K) input, got " +
                                            t.shape_str());
            break;
        case ClassifierVariant::Sequential:
            if (t.rank() != 2 || t.dim(0) != cfg_.seq_count || t.dim(1) != cfg_.latent_dim)
                throw std::invalid_argument("classifier: expected (S, M) input, got " +
                                            t.shape_str());
            break;
        case ClassifierVariant::Frequency:
            if (t.rank() != 1 || t.dim(0) != cfg_.k)
                throw std::invalid_argument("classifier: expected (K,) input, got " +
                                            t.shape_str());
            break;
    }
}

ClassifierModel::ForwardNodes ClassifierModel::forward(
    Graph& g, const std::vector<NodeId>& bound,
    const std::vector<const Tensor*>& inputs) const {
    if (inputs.empty()) throw std::invalid_argument("classifier forward: empty batch");
    for (const auto* t : inputs) check_input(*t);
    const std::size_t B = inputs.size();

    NodeId features = -1;  // (B, dense_in)
    switch (cfg_.variant) {
        case ClassifierVariant::TransitionMatrix: {
            Tensor stacked({B, 1, cfg_.k, cfg_.k});
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < cfg_.k * cfg_.k; ++j)
                    stacked[i * cfg_.k * cfg_.k + j] = (*inputs[i])[j];
            NodeId x = g.constant(std::move(stacked));
            NodeId c1 = g.conv3x3(x, bound[conv1_w_], bound[conv1_b_], /*relu=*/true);
            NodeId c2 = g.conv3x3(c1, bound[conv2_w_], bound[conv2_b_], /*relu=*/true);
            features = g.reshape(c2, {B, cfg_.conv_channels * cfg_.k * cfg_.k});
            break;
        }
        case ClassifierVariant::Sequential: {
            const std::size_t h = cfg_.recurrent_hidden;
            NodeId zero = g.constant(Tensor({B, h}));
            CellState state{zero, zero};
            for (std::size_t t = 0; t < cfg_.seq_count; ++t) {
                Tensor xt({B, cfg_.latent_dim});
                for (std::size_t i = 0; i < B; ++i)
                    for (std::size_t c = 0; c < cfg_.latent_dim; ++c)
                        xt.at(i, c) = inputs[i]->at(t, c);
                state = lstm_cell(g, g.constant(std::move(xt)), state, bound[rec_w_],
                                  bound[rec_u_], bound[rec_b_], h);
            }
            features = state.h;
            break;
        }
        case ClassifierVariant::Frequency: {
            Tensor stacked({B, cfg_.k});
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < cfg_.k; ++j) stacked.at(i, j) = (*inputs[i])[j];
            features = g.constant(std::move(stacked));
            break;
        }
    }

    ForwardNodes out;
    out.penultimate =
        g.activate(g.linear(features, bound[dense_w_], bound[dense_b_]), Activation::Relu);
    out.logits = g.linear(out.penultimate, bound[head_w_], bound[head_b_]);
    return out;
}

ClassifierActivations ClassifierModel::activations(const Tensor& input) const {
    Graph g;
    auto bound = params_.bind(g, /*trainable=*/false);
    auto nodes = forward(g, bound, {&input});
    ClassifierActivations act;
    const Tensor& pen = g.value(nodes.penultimate);
    act.penultimate = Tensor({cfg_.seq_count});
    for (std::size_t i = 0; i < cfg_.seq_count; ++i) act.penultimate[i] = pen[i];
    const Tensor& lg = g.value(nodes.logits);
    act.logits = Tensor({cfg_.classes});
    for (std::size_t i = 0; i < cfg_.classes; ++i) act.logits[i] = lg[i];
    NodeId probs = g.softmax(nodes.logits);
    const Tensor& pv = g.value(probs);
    act.probabilities = Tensor({cfg_.classes});
    double best = -1.0;
    for (std::size_t i = 0; i < cfg_.classes; ++i) {
        act.probabilities[i] = pv[i];
        if (pv[i] > best) {
            best = pv[i];
            act.predicted = static_cast<int>(i);
        }
    }
    return act;
}

NodeId cce_loss(Graph& g, NodeId logits, const std::vector<int>& labels) {
    return g.cross_entropy(logits, labels);
}

double cce_value(const Tensor& probabilities, int label) {
    return -std::log(std::max(probabilities[label], 1e-12));
}

}  // namespace seqforge

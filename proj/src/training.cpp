#include "seqforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "seqforge/checkpoint.hpp"
#include "seqforge/errors.hpp"
#include "seqforge/nn.hpp"
#include "seqforge/rng.hpp"

namespace seqforge {

PreparedData prepare_training_data(Dataset raw, FeatureSchema schema, std::size_t s_override) {
    PreparedData out;
    out.schema = std::move(schema);
    out.F = out.schema.encoded_width();
    out.dataset = std::move(raw);
    if (out.dataset.empty()) throw DataError("prepare: empty dataset");

    out.L = compute_pad_length(out.dataset);
    std::size_t max_s = 0;
    for (const auto& p : out.dataset) max_s = std::max(max_s, p.sequences.size());
    out.S = s_override > 0 ? s_override : max_s;

    for (auto& p : out.dataset)
        for (auto& s : p.sequences) pad_truncate(s, out.L, out.F);
    enforce_sequence_count(out.dataset, out.S, out.L, out.F);

    out.stats = compute_stats(out.dataset, out.schema);
    normalize(out.dataset, out.stats);

    for (const auto& p : out.dataset) {
        out.labels.push_back(p.label);
        std::vector<bool> real;
        for (const auto& s : p.sequences) real.push_back(s.valid_length > 0);
        out.real.push_back(std::move(real));
    }
    return out;
}

PreparedData prepare_eval_data(Dataset raw, const FeatureSchema& schema,
                               const NormalizationStats& stats, std::size_t S, std::size_t L) {
    PreparedData out;
    out.schema = schema;
    out.stats = stats;
    out.F = schema.encoded_width();
    out.S = S;
    out.L = L;
    out.dataset = std::move(raw);
    if (out.dataset.empty()) throw DataError("prepare: empty dataset");
    for (auto& p : out.dataset)
        for (auto& s : p.sequences) pad_truncate(s, out.L, out.F);
    enforce_sequence_count(out.dataset, out.S, out.L, out.F);
    normalize(out.dataset, out.stats);
    for (const auto& p : out.dataset) {
        out.labels.push_back(p.label);
        std::vector<bool> real;
        for (const auto& s : p.sequences) real.push_back(s.valid_length > 0);
        out.real.push_back(std::move(real));
    }
    return out;
}

namespace {

SequenceBatch batch_for_players(const PreparedData& data, const std::vector<std::size_t>& players) {
    std::vector<const GameSequence*> seqs;
    seqs.reserve(players.size() * data.S);
    for (std::size_t p : players)
        for (const auto& s : data.dataset[p].sequences) seqs.push_back(&s);
    return make_batch(seqs);
}

Tensor gram_of(const Tensor& latent) {
    const std::size_t n = latent.dim(0), m = latent.dim(1);
    Tensor g({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < m; ++c) s += latent.at(i, c) * latent.at(j, c);
            g.at(i, j) = s;
            g.at(j, i) = s;
        }
    return g;
}

std::vector<bool> real_flags(const PreparedData& data, std::size_t player) {
    return std::vector<bool>(data.real[player].begin(), data.real[player].end());
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

struct ClusterPhaseResult {
    Tensor latents;  // (players*S, M)
    KmeansResult kres;
    std::vector<std::vector<int>> ids;  // per player
};

ClusterPhaseResult run_cluster_phase(const InterpreterModel& interp, const PreparedData& data,
                                     const TrainingConfig& cfg, std::uint64_t kmeans_seed) {
    ClusterPhaseResult out;
    out.latents = encode_all(interp, data, cfg.B2);
    if (!out.latents.all_finite())
        throw TrainingError("cluster phase: non-finite latent representations");
    out.kres = kmeans(out.latents, cfg.K, kmeans_seed);
    out.ids.resize(data.players());
    for (std::size_t p = 0; p < data.players(); ++p) {
        out.ids[p].resize(data.S);
        for (std::size_t s = 0; s < data.S; ++s)
            out.ids[p][s] = out.kres.assignments[p * data.S + s];
    }
    return out;
}

void record_entropy(const PreparedData& data, const std::vector<std::vector<int>>& ids,
                    std::size_t k, TrainState& state) {
    std::vector<double> per_player;
    per_player.reserve(data.players());
    for (std::size_t p = 0; p < data.players(); ++p) {
        auto tm = build_adjacency(ids[p], real_flags(data, p), k);
        per_player.push_back(adjacency_entropy(tm));
    }
    state.entropy_trace.push_back(mean_of(per_player));
    state.entropy_per_player.push_back(std::move(per_player));
}

void write_checkpoint_dir(const std::string& root, std::size_t epoch, bool final_copy,
                          const TrainingConfig& cfg, ClassifierVariant variant,
                          const PreparedData& data, const InterpreterModel& interp,
                          const ClassifierModel& clf, const ParamStore& reducer,
                          const TrainState& state) {
    Checkpoint ck;
    nlohmann::ordered_json meta;
    meta["format_version"] = 1;
    {
        nlohmann::ordered_json jc;
        for (const auto& [k, v] : cfg.to_map()) jc[k] = v;
        meta["config"] = jc;
        meta["config_hash"] = cfg.hash();
    }
    meta["variant"] = variant_to_string(variant);
    meta["seed"] = cfg.seed;
    meta["collaborative_epoch"] = epoch;
    meta["dims"] = {{"S", data.S}, {"L", data.L}, {"F", data.F},
                    {"M", interp.latent_dim()}, {"K", cfg.K}};
    meta["kmeans_seed"] = state.final_kmeans_seed;
    {
        nlohmann::ordered_json js = nlohmann::ordered_json::array();
        for (const auto& f : data.schema.features) {
            nlohmann::ordered_json jf;
            jf["name"] = f.name;
            jf["kind"] = f.kind == FeatureKind::Numeric
                             ? "numeric"
                             : (f.kind == FeatureKind::Boolean ? "boolean" : "categorical");
            if (f.kind == FeatureKind::Categorical) jf["categories"] = f.categories;
            js.push_back(std::move(jf));
        }
        meta["schema"] = {{"features", js}};
    }
    meta["normalization"] = {{"mean", data.stats.mean},
                             {"std", data.stats.stddev},
                             {"apply", std::vector<int>(data.stats.apply.begin(),
                                                        data.stats.apply.end())}};
    {
        nlohmann::ordered_json jh;
        std::vector<std::size_t> epochs;
        std::vector<std::string> phases, names;
        std::vector<double> values;
        for (const auto& r : state.history) {
            epochs.push_back(r.epoch);
            phases.push_back(r.phase);
            names.push_back(r.loss_name);
            values.push_back(r.value);
        }
        jh["epoch"] = epochs;
        jh["phase"] = phases;
        jh["loss_name"] = names;
        jh["value"] = values;
        meta["loss_history"] = jh;
    }
    meta["entropy_trace"] = state.entropy_trace;
    {
        nlohmann::ordered_json shapes;
        auto add_shapes = [&shapes](const std::string& prefix, const ParamStore& ps) {
            for (std::size_t i = 0; i < ps.size(); ++i)
                shapes[prefix + "." + ps.entry(i).name] = ps.value(i).shape();
        };
        add_shapes("interpreter", interp.params());
        add_shapes("classifier", clf.params());
        add_shapes("reducer", reducer);
        shapes["clusters.centroids"] = state.clusters.centroids.shape();
        meta["tensor_shapes"] = shapes;
    }
    ck.meta = std::move(meta);
    ck.add_params("interpreter", interp.params());
    ck.add_params("classifier", clf.params());
    ck.add_params("reducer", reducer);
    ck.tensors["clusters.centroids"] = state.clusters.centroids;

    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03zu", epoch);
    ck.write(root + "/" + name);
    if (final_copy) ck.write(root + "/final");
}

}  // namespace

Tensor encode_all(const InterpreterModel& interp, const PreparedData& data,
                  std::size_t chunk_players) {
    const std::size_t n = data.players();
    const std::size_t m = interp.latent_dim();
    Tensor out({n * data.S, m});
    std::size_t done = 0;
    while (done < n) {
        const std::size_t take = std::min(chunk_players, n - done);
        std::vector<std::size_t> players(take);
        std::iota(players.begin(), players.end(), done);
        SequenceBatch batch = batch_for_players(data, players);
        Tensor latent = interp.encode_values(batch);
        for (std::size_t r = 0; r < latent.dim(0); ++r)
            for (std::size_t c = 0; c < m; ++c) out.at(done * data.S + r, c) = latent.at(r, c);
        done += take;
    }
    return out;
}

std::vector<Tensor> build_classifier_inputs(ClassifierVariant variant, const PreparedData& data,
                                            const Tensor& latents,
                                            const std::vector<std::vector<int>>& ids,
                                            std::size_t k) {
    std::vector<Tensor> inputs;
    inputs.reserve(data.players());
    const std::size_t m = latents.dim(1);
    for (std::size_t p = 0; p < data.players(); ++p) {
        switch (variant) {
            case ClassifierVariant::TransitionMatrix: {
                auto tm = build_adjacency(ids[p], real_flags(data, p), k);
                inputs.push_back(tm.normalized);
                break;
            }
            case ClassifierVariant::Sequential: {
                Tensor seq({data.S, m});
                for (std::size_t s = 0; s < data.S; ++s)
                    for (std::size_t c = 0; c < m; ++c)
                        seq.at(s, c) = latents.at(p * data.S + s, c);
                inputs.push_back(map_sequential(seq));
                break;
            }
            case ClassifierVariant::Frequency: {
                inputs.push_back(map_frequency(ids[p], real_flags(data, p), k));
                break;
            }
        }
    }
    return inputs;
}

std::vector<int> predict(const InterpreterModel& interp, const ClassifierModel& clf,
                         const ClusterModel& clusters, const PreparedData& data,
                         ClassifierVariant variant) {
    Tensor latents = encode_all(interp, data, 16);
    std::vector<int> flat = assign_nearest(latents, clusters.centroids);
    std::vector<std::vector<int>> ids(data.players());
    for (std::size_t p = 0; p < data.players(); ++p)
        ids[p].assign(flat.begin() + static_cast<long>(p * data.S),
                      flat.begin() + static_cast<long>((p + 1) * data.S));
    auto inputs = build_classifier_inputs(variant, data, latents, ids, clusters.k);

    std::vector<int> preds(data.players(), 0);
    Graph g;
    auto bound = clf.params().bind(g, false);
    std::vector<const Tensor*> ptrs;
    for (const auto& t : inputs) ptrs.push_back(&t);
    auto fwd = clf.forward(g, bound, ptrs);
    const Tensor& logits = g.value(fwd.logits);
    const std::size_t C = logits.dim(1);
    for (std::size_t p = 0; p < data.players(); ++p) {
        int best = 0;
        for (std::size_t c = 1; c < C; ++c)
            if (logits.at(p, c) > logits.at(p, best)) best = static_cast<int>(c);
        preds[p] = best;
    }
    return preds;
}

namespace {

struct Session {
    const PreparedData& data;
    const TrainingConfig& cfg;
    InterpreterModel& interp;
    ParamStore& reducer;
    AdamOptimizer& opt_interp;
    AdamOptimizer& opt_reducer;
    TrainState& state;
    std::size_t global_iter = 0;
};

std::vector<std::size_t> shuffled_players(const PreparedData& data, std::uint64_t seed,
                                          const char* tag, std::size_t salt) {
    std::vector<std::size_t> order(data.players());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(Rng::mix(seed, tag, salt));
    rng.shuffle(order);
    return order;
}

/// One interpreter inner epoch over full player batches. Returns per-loss
/// epoch means (reconstruction, trace, bridge, total).
std::array<double, 4> interpreter_inner_epoch(Session& ses, std::size_t epoch_salt,
                                              bool bridge_active,
                                              const std::vector<Tensor>& sign_consts,
                                              const std::vector<Tensor>& c_relu_consts) {
    const auto& data = ses.data;
    const auto& cfg = ses.cfg;
    const std::size_t B2 = cfg.B2;
    auto order = shuffled_players(data, cfg.seed, "interp-order", epoch_salt);

    std::array<double, 4> sums{0.0, 0.0, 0.0, 0.0};
    std::size_t batches = 0;
    for (std::size_t start = 0; start + B2 <= order.size(); start += B2) {
        std::vector<std::size_t> players(order.begin() + static_cast<long>(start),
                                         order.begin() + static_cast<long>(start + B2));
        SequenceBatch batch = batch_for_players(data, players);

        Graph g;
        auto bound = ses.interp.params().bind(g, true);
        NodeId reducer_node = -1;
        if (bridge_active) reducer_node = g.leaf(ses.reducer.value(0));

        auto enc = ses.interp.encode(g, bound, batch);
        if (!g.value(enc.latent).all_finite())
            throw TrainingError("interpreter diverged: non-finite latent activations");

        if (ses.global_iter % cfg.I == 0) {
            ses.state.indicator = top_k_eigenvectors(gram_of(g.value(enc.latent)), cfg.K);
            ses.state.indicator_refresh_iters.push_back(ses.global_iter);
        } else {
            ses.state.indicator.stale_counter++;
        }

        auto outs = ses.interp.decode(g, bound, enc, batch);
        NodeId recon = reconstruction_loss(g, outs, batch);
        NodeId trace = trace_loss(g, enc.latent, ses.state.indicator);

        NodeId bridge = -1;
        if (bridge_active) {
            std::vector<NodeId> per_player;
            per_player.reserve(players.size());
            for (std::size_t j = 0; j < players.size(); ++j) {
                const std::size_t p = players[j];
                NodeId rows = g.slice_rows(enc.latent, j * data.S, data.S);
                NodeId mag = magnitude(g, rows);
                NodeId irl = g.mul(mag, g.constant(sign_consts[p]));
                NodeId reduced = reduce_irl(g, irl, reducer_node);
                per_player.push_back(bridge_loss(g, c_relu_consts[p], reduced));
            }
            bridge = g.scale(g.add_scalars(per_player), 1.0 / static_cast<double>(B2));
        }

        NodeId total = interpreter_total_loss(g, recon, trace, bridge, cfg.beta, cfg.lambda);
        const double total_v = g.value(total).item();
        if (!std::isfinite(total_v))
            throw TrainingError("interpreter diverged: non-finite loss");

        g.backward(total);
        ses.opt_interp.step(ses.interp.params(), g, bound);
        if (bridge_active) ses.opt_reducer.step(ses.reducer, g, {reducer_node});

        sums[0] += g.value(recon).item();
        sums[1] += g.value(trace).item();
        sums[2] += bridge >= 0 ? g.value(bridge).item() : 0.0;
        sums[3] += total_v;
        ++batches;
        ++ses.global_iter;
    }
    if (batches == 0) throw ConfigError("training: B2 exceeds the player count");
    for (auto& s : sums) s /= static_cast<double>(batches);
    return sums;
}

/// One classifier inner epoch; returns mean CCE.
double classifier_inner_epoch(ClassifierModel& clf, AdamOptimizer& opt,
                              const PreparedData& data, const TrainingConfig& cfg,
                              const std::vector<Tensor>& inputs, const char* order_tag,
                              std::size_t epoch_salt) {
    auto order = shuffled_players(data, cfg.seed, order_tag, epoch_salt);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + cfg.B2 <= order.size(); start += cfg.B2) {
        std::vector<const Tensor*> batch_inputs;
        std::vector<int> batch_labels;
        for (std::size_t j = start; j < start + cfg.B2; ++j) {
            batch_inputs.push_back(&inputs[order[j]]);
            batch_labels.push_back(data.labels[order[j]]);
        }
        Graph g;
        auto bound = clf.params().bind(g, true);
        auto fwd = clf.forward(g, bound, batch_inputs);
        NodeId loss = cce_loss(g, fwd.logits, batch_labels);
        const double v = g.value(loss).item();
        if (!std::isfinite(v)) throw TrainingError("classifier diverged: non-finite loss");
        g.backward(loss);
        opt.step(clf.params(), g, bound);
        sum += v;
        ++batches;
    }
    return batches > 0 ? sum / static_cast<double>(batches) : 0.0;
}

void validate_setup(const PreparedData& data, const TrainingConfig& cfg) {
    cfg.validate();
    if (data.players() < cfg.B2)
        throw ConfigError("training: B2 (" + std::to_string(cfg.B2) +
                          ") exceeds the player count (" + std::to_string(data.players()) + ")");
    const std::size_t b1 = data.S * cfg.B2;
    if (cfg.K > b1)
        throw ConfigError("training: K (" + std::to_string(cfg.K) +
                          ") exceeds the batch sequence count B1 (" + std::to_string(b1) + ")");
    if (cfg.K > data.players() * data.S)
        throw ConfigError("training: K exceeds the total sequence count");
}

}  // namespace

TrainResult collaborative_train(const PreparedData& data, const TrainingConfig& cfg,
                                ClassifierVariant variant, const std::string& checkpoint_root,
                                const TrainHooks& hooks) {
    validate_setup(data, cfg);

    TrainResult result;
    InterpreterConfig icfg{data.F, {cfg.m1, cfg.m2, cfg.m3}, cfg.attention_dim};
    result.interpreter = std::make_unique<InterpreterModel>(icfg, cfg.seed);
    ClassifierConfig ccfg;
    ccfg.variant = variant;
    ccfg.k = cfg.K;
    ccfg.seq_count = data.S;
    ccfg.latent_dim = icfg.latent_dim();
    ccfg.classes = kNumClasses;
    ccfg.conv_channels = cfg.conv_channels;
    ccfg.recurrent_hidden = cfg.recurrent_hidden;
    result.classifier = std::make_unique<ClassifierModel>(ccfg, cfg.seed);

    ParamStore reducer;
    {
        Rng rng(Rng::mix(cfg.seed, "reducer-init"));
        reducer.add("weights", small_vector(data.S, rng));
    }

    AdamOptimizer opt_interp(cfg.interpreter_lr);
    AdamOptimizer opt_reducer(cfg.interpreter_lr);
    AdamOptimizer opt_clf(cfg.classifier_lr);

    TrainState& state = result.state;
    Session ses{data, cfg, *result.interpreter, reducer, opt_interp, opt_reducer, state};

    std::vector<Tensor> current_inputs;  // classifier inputs from the last cluster phase

    for (std::size_t ce = 1; ce <= cfg.collaborative_epochs; ++ce) {
        const bool bridge_active = ce >= 2;

        // Frozen per-player bridge constants for this phase: sign matrices
        // from the previous cluster phase's ids, penultimate activations from
        // the frozen classifier on the previous phase's inputs.
        std::vector<Tensor> sign_consts, c_relu_consts;
        if (bridge_active) {
            sign_consts.reserve(data.players());
            c_relu_consts.reserve(data.players());
            for (std::size_t p = 0; p < data.players(); ++p) {
                sign_consts.push_back(sign_matrix(state.cluster_ids[p]));
                c_relu_consts.push_back(
                    result.classifier->activations(current_inputs[p]).penultimate);
            }
        }

        if (hooks.phase_start)
            hooks.phase_start("interpreter", ce, *result.interpreter, *result.classifier);
        for (std::size_t ie = 1; ie <= cfg.interpreter_inner_epochs; ++ie) {
            auto means = interpreter_inner_epoch(ses, ce * 100000 + ie, bridge_active,
                                                 sign_consts, c_relu_consts);
            const std::size_t epoch_no = (ce - 1) * cfg.interpreter_inner_epochs + ie;
            state.history.push_back({epoch_no, "interpreter", "reconstruction", means[0]});
            state.history.push_back({epoch_no, "interpreter", "trace", means[1]});
            if (bridge_active)
                state.history.push_back({epoch_no, "interpreter", "bridge", means[2]});
            state.history.push_back({epoch_no, "interpreter", "total", means[3]});
        }
        if (hooks.phase_end)
            hooks.phase_end("interpreter", ce, *result.interpreter, *result.classifier);

        // cluster phase
        const std::uint64_t kseed = Rng::mix(cfg.seed, "kmeans", ce);
        auto phase = run_cluster_phase(*result.interpreter, data, cfg, kseed);
        state.clusters = phase.kres.model;
        state.cluster_ids = phase.ids;
        state.final_kmeans_seed = kseed;
        record_entropy(data, phase.ids, cfg.K, state);
        current_inputs = build_classifier_inputs(variant, data, phase.latents, phase.ids, cfg.K);

        // classifier phase
        if (hooks.phase_start)
            hooks.phase_start("classifier", ce, *result.interpreter, *result.classifier);
        for (std::size_t cle = 1; cle <= cfg.classifier_inner_epochs; ++cle) {
            const double cce = classifier_inner_epoch(*result.classifier, opt_clf, data, cfg,
                                                      current_inputs, "clf-order",
                                                      ce * 100000 + cle);
            const std::size_t epoch_no = (ce - 1) * cfg.classifier_inner_epochs + cle;
            state.history.push_back({epoch_no, "classifier", "cce", cce});
        }
        if (hooks.phase_end)
            hooks.phase_end("classifier", ce, *result.interpreter, *result.classifier);

        state.collaborative_epoch = ce;
        if (!checkpoint_root.empty())
            write_checkpoint_dir(checkpoint_root, ce, ce == cfg.collaborative_epochs, cfg,
                                 variant, data, *result.interpreter, *result.classifier, reducer,
                                 state);
    }

    result.reducer_weights = reducer.value(0);
    return result;
}

TrainResult run_ablation(const PreparedData& data, const TrainingConfig& cfg,
                         ClassifierVariant variant, const std::string& checkpoint_root,
                         const TrainHooks& hooks) {
    validate_setup(data, cfg);

    TrainResult result;
    InterpreterConfig icfg{data.F, {cfg.m1, cfg.m2, cfg.m3}, cfg.attention_dim};
    result.interpreter = std::make_unique<InterpreterModel>(icfg, cfg.seed);
    ClassifierConfig ccfg;
    ccfg.variant = variant;
    ccfg.k = cfg.K;
    ccfg.seq_count = data.S;
    ccfg.latent_dim = icfg.latent_dim();
    ccfg.classes = kNumClasses;
    ccfg.conv_channels = cfg.conv_channels;
    ccfg.recurrent_hidden = cfg.recurrent_hidden;

    ParamStore reducer;  // unused by the disconnected baseline, kept for checkpoint parity
    {
        Rng rng(Rng::mix(cfg.seed, "reducer-init"));
        reducer.add("weights", small_vector(data.S, rng));
    }
    AdamOptimizer opt_interp(cfg.interpreter_lr);
    AdamOptimizer opt_reducer(cfg.interpreter_lr);

    TrainState& state = result.state;
    result.classifier = std::make_unique<ClassifierModel>(ccfg, cfg.seed);
    Session ses{data, cfg, *result.interpreter, reducer, opt_interp, opt_reducer, state};

    // Interpreter to convergence on the clustering objective alone; the
    // entropy trace is still recorded per collaborative epoch for
    // side-by-side diagnostics with the full run.
    ClusterPhaseResult last_phase;
    for (std::size_t ce = 1; ce <= cfg.collaborative_epochs; ++ce) {
        if (hooks.phase_start)
            hooks.phase_start("interpreter", ce, *result.interpreter, *result.classifier);
        for (std::size_t ie = 1; ie <= cfg.interpreter_inner_epochs; ++ie) {
            auto means = interpreter_inner_epoch(ses, ce * 100000 + ie, false, {}, {});
            const std::size_t epoch_no = (ce - 1) * cfg.interpreter_inner_epochs + ie;
            state.history.push_back({epoch_no, "interpreter", "reconstruction", means[0]});
            state.history.push_back({epoch_no, "interpreter", "trace", means[1]});
            state.history.push_back({epoch_no, "interpreter", "total", means[3]});
        }
        if (hooks.phase_end)
            hooks.phase_end("interpreter", ce, *result.interpreter, *result.classifier);

        const std::uint64_t kseed = Rng::mix(cfg.seed, "kmeans", ce);
        last_phase = run_cluster_phase(*result.interpreter, data, cfg, kseed);
        state.clusters = last_phase.kres.model;
        state.cluster_ids = last_phase.ids;
        state.final_kmeans_seed = kseed;
        record_entropy(data, last_phase.ids, cfg.K, state);
        state.collaborative_epoch = ce;
    }

    // The interpreter is frozen from here on; transform its inputs once.
    auto inputs =
        build_classifier_inputs(variant, data, last_phase.latents, last_phase.ids, cfg.K);

    // Train the solitary classifier twice from identical initializations;
    // with a static encoder the second trajectory must repeat the first.
    for (int pass = 1; pass <= 2; ++pass) {
        result.classifier = std::make_unique<ClassifierModel>(ccfg, cfg.seed);
        AdamOptimizer opt_clf(cfg.classifier_lr);
        const std::string phase_name = "classifier_pass" + std::to_string(pass);
        if (hooks.phase_start)
            hooks.phase_start(phase_name, cfg.collaborative_epochs, *result.interpreter,
                              *result.classifier);
        for (std::size_t cle = 1; cle <= cfg.classifier_inner_epochs; ++cle) {
            const double cce = classifier_inner_epoch(*result.classifier, opt_clf, data, cfg,
                                                      inputs, "clf-order-ablation", cle);
            state.history.push_back({cle, phase_name, "cce", cce});
        }
        if (hooks.phase_end)
            hooks.phase_end(phase_name, cfg.collaborative_epochs, *result.interpreter,
                            *result.classifier);
    }

    result.reducer_weights = reducer.value(0);
    if (!checkpoint_root.empty())
        write_checkpoint_dir(checkpoint_root, cfg.collaborative_epochs, true, cfg, variant, data,
                             *result.interpreter, *result.classifier, reducer, state);
    return result;
}

void write_loss_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write loss history: " + path);
    out << "epoch,phase,loss_name,value\n";
    char buf[48];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.value);
        out << r.epoch << "," << r.phase << "," << r.loss_name << "," << buf << "\n";
    }
}

}  // namespace seqforge

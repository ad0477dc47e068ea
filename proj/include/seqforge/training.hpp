#ifndef SEQFORGE_TRAINING_HPP
#define SEQFORGE_TRAINING_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "seqforge/bridge.hpp"
#include "seqforge/classifier.hpp"
#include "seqforge/config.hpp"
#include "seqforge/data.hpp"
#include "seqforge/eig.hpp"
#include "seqforge/evaluation.hpp"
#include "seqforge/interpreter.hpp"
#include "seqforge/kmeans.hpp"

namespace seqforge {

/// A dataset after the full ingestion pipeline: padded to (S, L, F) per
/// player and z-scored with training-split statistics.
struct PreparedData {
    FeatureSchema schema;
    NormalizationStats stats;
    Dataset dataset;
    std::size_t S = 0, L = 0, F = 0;
    std::vector<int> labels;                // per player
    std::vector<std::vector<bool>> real;    // per player, per sequence

    std::size_t players() const { return dataset.size(); }
};

/// Pipeline for the training split: derives L (95th-percentile pad length)
/// and S (max sequence count unless overridden), pads, computes stats,
/// normalizes.
PreparedData prepare_training_data(Dataset raw, FeatureSchema schema, std::size_t s_override = 0);

/// Pipeline for held-out data: reuses the training split's S, L and stats.
PreparedData prepare_eval_data(Dataset raw, const FeatureSchema& schema,
                               const NormalizationStats& stats, std::size_t S, std::size_t L);

struct EpochRecord {
    std::size_t epoch = 0;  // inner epoch, counted per phase stream
    std::string phase;      // "interpreter", "classifier", "classifier_pass1", ...
    std::string loss_name;  // "reconstruction", "trace", "bridge", "total", "cce"
    double value = 0.0;
};

struct TrainState {
    std::size_t collaborative_epoch = 0;
    std::vector<EpochRecord> history;
    ClusterIndicator indicator;
    ClusterModel clusters;
    std::vector<std::vector<int>> cluster_ids;          // per player, length S
    std::vector<double> entropy_trace;                  // mean bits per collaborative epoch
    std::vector<std::vector<double>> entropy_per_player;
    std::vector<std::size_t> indicator_refresh_iters;   // global iteration numbers
    std::uint64_t final_kmeans_seed = 0;
};

struct TrainResult {
    std::unique_ptr<InterpreterModel> interpreter;
    std::unique_ptr<ClassifierModel> classifier;
    Tensor reducer_weights;
    TrainState state;
};

/// Observation points used by tests to verify freeze invariants.
struct TrainHooks {
    std::function<void(const std::string& phase, std::size_t collaborative_epoch,
                       const InterpreterModel& interp, const ClassifierModel& clf)>
        phase_start;
    std::function<void(const std::string& phase, std::size_t collaborative_epoch,
                       const InterpreterModel& interp, const ClassifierModel& clf)>
        phase_end;
};

/// Alternating collaborative training. Each collaborative epoch runs an
/// interpreter phase (classifier frozen; bridge active from epoch 2), a
/// cluster phase (k-means over all latents fixes ids for the sign matrix and
/// the classifier inputs), and a classifier phase (interpreter frozen).
/// Checkpoints land under `<checkpoint_root>/epoch_NNN` when a root is given.
TrainResult collaborative_train(const PreparedData& data, const TrainingConfig& cfg,
                                ClassifierVariant variant,
                                const std::string& checkpoint_root = "",
                                const TrainHooks& hooks = {});

/// Disconnected baseline: the interpreter trains to convergence on the
/// clustering objective alone, is frozen, and the solitary classifier then
/// trains twice from an identical initialization (the repeat makes the
/// static-input loss trajectory visible).
TrainResult run_ablation(const PreparedData& data, const TrainingConfig& cfg,
                         ClassifierVariant variant, const std::string& checkpoint_root = "",
                         const TrainHooks& hooks = {});

/// Frozen-weight latents for every sequence, in dataset order (players *
/// S rows).
Tensor encode_all(const InterpreterModel& interp, const PreparedData& data,
                  std::size_t chunk_players);

/// Per-player classifier inputs for the given variant.
std::vector<Tensor> build_classifier_inputs(ClassifierVariant variant, const PreparedData& data,
                                            const Tensor& latents,
                                            const std::vector<std::vector<int>>& ids,
                                            std::size_t k);

/// End-to-end prediction from frozen models via nearest-centroid ids.
std::vector<int> predict(const InterpreterModel& interp, const ClassifierModel& clf,
                         const ClusterModel& clusters, const PreparedData& data,
                         ClassifierVariant variant);

void write_loss_history_csv(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace seqforge

#endif

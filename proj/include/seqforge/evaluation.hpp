#ifndef SEQFORGE_EVALUATION_HPP
#define SEQFORGE_EVALUATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "seqforge/classifier.hpp"
#include "seqforge/data.hpp"
#include "seqforge/tensor.hpp"

namespace seqforge {

struct MetricsReport {
    Tensor confusion;                     // (C, C): rows true, columns predicted
    std::vector<double> precision;        // percent, per class
    std::vector<double> recall;           // percent, per class
    std::vector<bool> precision_defined;  // false when the class was never predicted
    std::vector<std::size_t> support;
    double macro_precision = 0.0;  // percent
    double macro_recall = 0.0;     // percent
    // run metadata
    std::string config_hash;
    std::uint64_t seed = 0;
};

/// Standard per-class precision/recall. Undefined precision (a class never
/// predicted) reports as 0 with precision_defined=false. Throws on empty
/// input or mismatched lengths.
MetricsReport precision_recall(const std::vector<int>& predictions,
                               const std::vector<int>& labels);

/// Shannon entropy (bits) of the globally normalized transition cells.
/// All-zero matrices report 0.
double adjacency_entropy(const TransitionMatrix& tm);

struct FeatureStats {
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

struct ClusterProfile {
    int cluster_id = 0;
    std::size_t population = 0;              // real sequences in the cluster
    std::vector<FeatureStats> features;      // raw scale; empty when population 0
    double mean_sequence_length = 0.0;
};

/// Raw-scale summary statistics per cluster. `assignments` holds one cluster
/// id per real (non-padded) sequence, flattened in dataset order. Profiles
/// come back sorted by population descending (cluster id breaks ties).
std::vector<ClusterProfile> cluster_profiles(const Dataset& dataset,
                                             const std::vector<int>& assignments,
                                             const FeatureSchema& schema, std::size_t k);

/// Adjusted Rand index between two labelings of the same items.
double cluster_recovery(const std::vector<int>& assignments,
                        const std::vector<int>& ground_truth);

struct EmbeddingRow {
    std::string player_id;
    std::size_t seq_index = 0;
    int cluster_id = 0;
    std::vector<double> latent;
};

/// CSV export: player_id,seq_index,cluster_id,h_1..h_M with full (17
/// significant digit) precision.
void export_embeddings(const std::string& path, const std::vector<EmbeddingRow>& rows);
std::vector<EmbeddingRow> load_embeddings(const std::string& path);

}  // namespace seqforge

#endif

#ifndef SEQFORGE_DATA_HPP
#define SEQFORGE_DATA_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "seqforge/tensor.hpp"

namespace seqforge {

// The three engagement classes, in label-index order.
inline constexpr std::array<const char*, 3> kClassNames = {"Sustainer", "Burnout", "Churnout"};
inline constexpr int kNumClasses = 3;

int label_index(const std::string& name);  // throws DataError on unknown label

enum class FeatureKind { Numeric, Boolean, Categorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    std::vector<std::string> categories;  // categorical only

    std::size_t encoded_width() const {
        return kind == FeatureKind::Categorical ? categories.size() : 1;
    }
};

/// Declares the per-game feature layout and how each feature encodes into
/// the fixed-width float vector (booleans to 0/1, categoricals one-hot).
struct FeatureSchema {
    std::vector<FeatureSpec> features;

    std::size_t encoded_width() const;  // F

    /// Encoded-column metadata.
    std::vector<std::string> column_names() const;
    /// True for columns that take part in z-score normalization (numeric
    /// feature columns only).
    std::vector<bool> numeric_columns() const;

    static FeatureSchema load(const std::string& path);
    void save(const std::string& path) const;
};

/// Per-encoded-column z-score statistics from the training split. Columns
/// whose std collapses (constant features) are passed through unscaled.
struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<bool> apply;
};

struct GameRecord {
    std::vector<double> features;  // encoded, length F
};

struct GameSequence {
    std::vector<GameRecord> games;  // raw order, oldest first
    Tensor padded;                  // (L, F) after pad_truncate
    std::size_t valid_length = 0;

    std::size_t raw_length() const { return games.size(); }
};

struct PlayerSample {
    std::string player_id;
    int label = 0;  // index into kClassNames
    std::vector<GameSequence> sequences;
    std::vector<int> archetypes;  // ground truth per sequence; empty if unknown
};

using Dataset = std::vector<PlayerSample>;

/// Reads a JSON-lines dataset, encoding features per schema. No padding or
/// normalization happens here. Errors carry 1-based line numbers.
Dataset load_dataset(const std::string& path, const FeatureSchema& schema);

/// Writes the dataset in the same JSON-lines format (raw feature values).
void save_dataset(const std::string& path, const Dataset& dataset, const FeatureSchema& schema);

/// 95th percentile of raw sequence lengths, nearest-rank method: the
/// smallest length with at least 95% of lengths at or below it.
std::size_t compute_pad_length(const Dataset& dataset);

/// Fills sequence.padded with shape (L, F): sequences longer than L keep the
/// most recent L games, shorter ones zero-pad at the tail.
void pad_truncate(GameSequence& sequence, std::size_t pad_length, std::size_t width);

/// Enforces exactly S sequences per sample: all-zero sequences appended when
/// short, oldest dropped when long. Call after pad_truncate.
void enforce_sequence_count(Dataset& dataset, std::size_t seq_count, std::size_t pad_length,
                            std::size_t width);

NormalizationStats compute_stats(const Dataset& dataset, const FeatureSchema& schema);

/// Z-scores numeric columns of valid (non-padded) rows in place on the
/// padded tensors; padded rows stay exactly zero. Raw game records are left
/// untouched so profile reporting can use original scales.
void normalize(Dataset& dataset, const NormalizationStats& stats);

}  // namespace seqforge

#endif

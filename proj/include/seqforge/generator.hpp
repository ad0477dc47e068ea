#ifndef SEQFORGE_GENERATOR_HPP
#define SEQFORGE_GENERATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "seqforge/data.hpp"

namespace seqforge {

/// One planted behaviour archetype: a diagonal-Gaussian feature profile plus
/// a uniform integer sequence-length range.
struct ArchetypeSpec {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::size_t length_min = 1;
    std::size_t length_max = 1;
};

/// Recipe for a synthetic dataset: per-class Markov chains over archetypes
/// drive which behaviour each of the S sequences exhibits.
struct GeneratorSpec {
    std::size_t n_archetypes = 0;
    std::vector<std::string> feature_names;
    std::vector<ArchetypeSpec> archetypes;
    // One (n_archetypes x n_archetypes) row-stochastic matrix per class.
    std::vector<Tensor> class_transitions;
    std::size_t sequences_per_player = 0;  // S
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError

    /// All-numeric schema matching feature_names.
    FeatureSchema schema() const;

    static GeneratorSpec load(const std::string& path);
    void save(const std::string& path) const;
};

/// Draws n_per_class players per class. Each player's archetype chain starts
/// uniformly and follows the class transition matrix; every sequence's games
/// come from its archetype's feature distribution. Ground-truth archetypes
/// are stored on the samples (for evaluation only; training never sees them).
Dataset generate_synthetic(const GeneratorSpec& spec, std::size_t n_per_class);

}  // namespace seqforge

#endif

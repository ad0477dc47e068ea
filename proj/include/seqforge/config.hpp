#ifndef SEQFORGE_CONFIG_HPP
#define SEQFORGE_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>

namespace seqforge {

/// Every training hyperparameter in one serializable record. File form is
/// flat `key = value` lines keyed by the field names below; CLI flags with
/// the same names override file values.
struct TrainingConfig {
    std::size_t K = 7;
    double lambda = 0.5;
    double beta = 0.3;
    std::size_t I = 10;  // indicator refresh period, in interpreter iterations
    std::size_t collaborative_epochs = 8;
    std::size_t interpreter_inner_epochs = 60;
    std::size_t classifier_inner_epochs = 60;
    std::size_t B2 = 8;  // players per classifier batch; B1 = S * B2
    double interpreter_lr = 1e-3;
    double classifier_lr = 1e-3;
    std::uint64_t seed = 1;
    // model sizes
    std::size_t S = 0;  // sequences per sample; 0 = derive from the dataset
    std::size_t m1 = 64;
    std::size_t m2 = 32;
    std::size_t m3 = 16;
    std::size_t attention_dim = 16;
    std::size_t conv_channels = 8;
    std::size_t recurrent_hidden = 24;

    void validate() const;  // throws ConfigError

    /// Flat key/value view (insertion order = declaration order).
    std::map<std::string, std::string> to_map() const;
    void set(const std::string& key, const std::string& value);  // throws ConfigError

    static TrainingConfig from_file(const std::string& path);
    void save(const std::string& path) const;

    /// Stable content hash of the serialized config.
    std::string hash() const;
};

}  // namespace seqforge

#endif

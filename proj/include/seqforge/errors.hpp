#ifndef SEQFORGE_ERRORS_HPP
#define SEQFORGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace seqforge {

/// Invalid input data or files (CLI exit code 2).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Runtime failure such as training divergence (CLI exit code 1).
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace seqforge

#endif

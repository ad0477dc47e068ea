#ifndef SEQFORGE_CHECKPOINT_HPP
#define SEQFORGE_CHECKPOINT_HPP

#include <json.hpp>

#include <map>
#include <string>

#include "seqforge/params.hpp"
#include "seqforge/tensor.hpp"

namespace seqforge {

/// Binary tensor blob: 16-byte header of four little-endian uint32
/// (rank, then up to three dims; unused dims are zero), followed by the
/// row-major values as little-endian 64-bit floats.
void write_tensor_blob(const std::string& path, const Tensor& t);
Tensor read_tensor_blob(const std::string& path);

/// A checkpoint directory holds meta.json plus one blob per weight tensor.
/// Writes are atomic: everything lands in a temp directory that is renamed
/// into place.
struct Checkpoint {
    nlohmann::ordered_json meta;
    std::map<std::string, Tensor> tensors;

    void write(const std::string& dir) const;
    static Checkpoint read(const std::string& dir);

    /// Adds every parameter under "<prefix>.<name>".
    void add_params(const std::string& prefix, const ParamStore& params);
    /// Restores parameter values from "<prefix>.<name>" entries.
    void load_params(const std::string& prefix, ParamStore& params) const;
};

}  // namespace seqforge

#endif

#include "seqforge/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "seqforge/errors.hpp"

namespace seqforge {

namespace fs = std::filesystem;

namespace {

// Blobs are written in native byte order; the supported platforms here are
// all little-endian, which is what the format mandates.
static_assert(sizeof(double) == 8, "64-bit doubles required");

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensor_blob(const std::string& path, const Tensor& t) {
    if (t.rank() > 3) throw std::invalid_argument("tensor blob: rank must be <= 3");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write tensor blob: " + path);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t i = 0; i < 3; ++i)
        put_u32(out, i < t.rank() ? static_cast<std::uint32_t>(t.dim(i)) : 0u);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!out) throw DataError("short write on tensor blob: " + path);
}

Tensor read_tensor_blob(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open tensor blob: " + path);
    const std::uint32_t rank = get_u32(in);
    if (rank > 3) throw DataError("tensor blob has invalid rank: " + path);
    std::vector<std::size_t> shape;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::uint32_t d = get_u32(in);
        if (i < rank) shape.push_back(d);
    }
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw DataError("short read on tensor blob: " + path);
    return t;
}

void Checkpoint::write(const std::string& dir) const {
    const fs::path target(dir);
    const fs::path tmp = target.string() + ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    {
        std::ofstream out(tmp / "meta.json");
        if (!out) throw DataError("cannot write checkpoint meta: " + (tmp / "meta.json").string());
        out << meta.dump(2) << "\n";
    }
    for (const auto& [name, tensor] : tensors) write_tensor_blob((tmp / (name + ".bin")).string(), tensor);
    fs::remove_all(target);
    fs::rename(tmp, target);
}

Checkpoint Checkpoint::read(const std::string& dir) {
    const fs::path root(dir);
    Checkpoint ck;
    std::ifstream in(root / "meta.json");
    if (!in) throw DataError("checkpoint has no meta.json: " + dir);
    try {
        in >> ck.meta;
    } catch (const std::exception& e) {
        throw DataError("malformed checkpoint meta in " + dir + ": " + e.what());
    }
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.path().extension() != ".bin") continue;
        ck.tensors[entry.path().stem().string()] = read_tensor_blob(entry.path().string());
    }
    return ck;
}

void Checkpoint::add_params(const std::string& prefix, const ParamStore& params) {
    for (std::size_t i = 0; i < params.size(); ++i)
        tensors[prefix + "." + params.entry(i).name] = params.value(i);
}

void Checkpoint::load_params(const std::string& prefix, ParamStore& params) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string key = prefix + "." + params.entry(i).name;
        auto it = tensors.find(key);
        if (it == tensors.end()) throw DataError("checkpoint missing tensor: " + key);
        if (!(it->second.shape() == params.value(i).shape()))
            throw DataError("checkpoint tensor shape mismatch: " + key);
        params.value(i) = it->second;
    }
}

}  // namespace seqforge

#pragma once

#include "ttvrs/autograd.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ttvrs {

/// Layer widths of the toy encoder, projection, decoder and memory.
struct ModelDims {
    static constexpr int stride = 4;  // two stride-2 convolutions

    int conv1_channels = 16;
    int feature_dim = 32;      // d_f, channels of the stride-4 feature map
    int fine_channels = 8;     // full-resolution skip features
    int pos_channels = 8;      // fixed sinusoidal position channels read by the decoder, multiple of 4
    int raw_token_dim = 64;    // d', encoder token width
    int token_dim = 32;        // d, decoder prompt width
    int proj_hidden = 64;
    int proj_layers = 2;
    int key_dim = 16;          // memory attention keys
    int text_hidden = 32;
    int role_dim = 8;
    int vocab = 16;
    int num_codes = 0;         // expression codes; 0 means kNumExpressionCodes

    /// Tiny dimensions used by gradient checks (d = 8).
    static ModelDims micro();
};

/// Ordered collection of named tensors. Order is the checkpoint order.
class ParamSet {
public:
    ag::Var& add(const std::string& name, Tensor value, bool trainable = true);
    const ag::Var& get(const std::string& name) const;
    ag::Var& get(const std::string& name);
    bool contains(const std::string& name) const;

    struct Entry {
        std::string name;
        ag::Var var;
        bool trainable;
    };
    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

    void zero_grad();
    std::size_t trainable_count() const;

private:
    std::vector<Entry> entries_;
};

struct Model {
    ModelDims dims;
    ParamSet params;

    const ag::Var& p(const std::string& name) const { return params.get(name); }
    /// Binarization threshold on sigmoid outputs.
    double tau() const { return params.get("dec.tau").value()[0]; }
    /// Deep copy with fresh leaf nodes.
    Model clone() const;
};

/// Seeded uniform(-range, range) weights, zero biases, tau = 0.5.
Model init_model(const ModelDims& dims, std::uint64_t seed, double range = 0.1);

/// Thrown for unreadable or inconsistent checkpoints.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binary format: "TTVRS1", then per tensor: u32 name length, name bytes,
/// u32 rank, u32 dims, little-endian float32 data.
void save_checkpoint(const std::filesystem::path& file, const Model& model);
Model load_checkpoint(const std::filesystem::path& file);

} // namespace ttvrs

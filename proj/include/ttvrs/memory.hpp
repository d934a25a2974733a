#pragma once

// Memory-conditioned mask propagation. The keyframe is decoded without
// memory; every other frame attends to a FIFO bank of encoded
// (features, predicted mask) memories before decoding.

#include "ttvrs/aggregation.hpp"
#include "ttvrs/decoder.hpp"
#include "ttvrs/encoder.hpp"
#include "ttvrs/model.hpp"
#include "ttvrs/video.hpp"

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

namespace ttvrs {

struct MemoryEntry {
    int frame = 0;
    ag::Var memory;  // d_f x h x w
};

class MemoryBank {
public:
    static constexpr int default_capacity = 4;

    explicit MemoryBank(int capacity = default_capacity);

    /// Appends, evicting the oldest entry when full.
    void push(MemoryEntry entry);
    const std::deque<MemoryEntry>& entries() const { return entries_; }
    int size() const { return static_cast<int>(entries_.size()); }
    int capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }

private:
    int capacity_;
    std::deque<MemoryEntry> entries_;
};

/// Block average of a binary H x W mask down to h x w cells.
Tensor downsample_mask(std::span<const std::uint8_t> mask, int height, int width, int factor);

/// tanh(conv3x3([features; downsampled mask])).
MemoryEntry encode_memory(int frame, const ag::Var& features, std::span<const std::uint8_t> mask, int height,
                          int width, const Model& model);

/// features + V(M) softmax(Q(F)^T K(M) / sqrt(dk))^T over all bank locations.
/// Returns `features` itself when the bank is empty.
ag::Var attend(const ag::Var& features, const MemoryBank& bank, const Model& model);

enum class PropagationMode { train_adjacent, full_video };

/// Non-keyframe positions in visiting order.
std::vector<int> propagation_order(int num_frames, int keyframe, PropagationMode mode);

struct PropagationResult {
    int keyframe = 0;
    std::vector<int> order;                     // visited positions, keyframe first
    std::vector<std::vector<std::uint8_t>> masks;  // per position, H x W; empty if not visited
    std::vector<ag::Var> logits;                // per position; empty Var if not visited
    std::vector<double> occlusion;              // per position; NaN if not visited
    std::vector<Tensor> mask_embeddings;        // per position, d_f x h x w
    int bank_size = 0;

    /// Masklet over all positions. Throws std::logic_error if a frame was not visited.
    Masklet masklet(int height, int width) const;
};

struct PropagationOptions {
    PropagationMode mode = PropagationMode::full_video;
    int capacity = MemoryBank::default_capacity;
    /// Single-frame inference: decode every frame from the fused token without memory.
    bool use_memory = true;
};

/// `features` holds the frames to segment (positions 0..n-1); `keyframe` is a position.
PropagationResult propagate(const FrameFeatures& features, int keyframe, const FusedToken& fused,
                            const Model& model, const PropagationOptions& options = {});

PropagationResult propagate(const VideoClip& clip, int keyframe, const FusedToken& fused, const Model& model,
                            const PropagationOptions& options = {});

std::string to_string(PropagationMode m);

} // namespace ttvrs

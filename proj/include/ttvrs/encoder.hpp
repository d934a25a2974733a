#pragma once

// Toy stand-in for the multimodal encoder: a two-block convolutional frame
// encoder, a query embedder, per-frame SEG and clip-level TAK token heads, a
// templated text head, and the MLP that projects tokens into the decoder's
// prompt space.

#include "ttvrs/autograd.hpp"
#include "ttvrs/model.hpp"
#include "ttvrs/synthetic.hpp"
#include "ttvrs/video.hpp"

#include <span>
#include <vector>

namespace ttvrs {

/// Encoder output for a list of frames.
struct FrameFeatures {
    std::vector<int> indices;
    std::vector<ag::Var> maps;    // d_f x H/4 x W/4
    std::vector<ag::Var> fine;    // fine_channels x H x W
    std::vector<ag::Var> pooled;  // d_f, spatial mean of maps

    int size() const { return static_cast<int>(maps.size()); }
    /// Features of the frames at positions `pos` (positions into this set).
    FrameFeatures select(std::span<const int> pos) const;
};

/// Raw encoder tokens: seg is T' x d', tak is {d'}.
struct RawTokenSet {
    ag::Var seg;
    ag::Var tak;
};

/// Tokens after projection: seg is T' x d, tak is {d}.
struct ProjectedTokenSet {
    ag::Var seg;
    ag::Var tak;
    int frames() const { return seg.value().rows(); }
};

struct TokenOutput {
    RawTokenSet raw;
    ag::Var text_logits;  // L x V
};

namespace vocab {
inline constexpr int pad = 0;
inline constexpr int sure = 1;
inline constexpr int it_is = 2;
inline constexpr int word_color = 3;
inline constexpr int word_position = 4;
inline constexpr int word_motion = 5;
inline constexpr int seg = 6;
inline constexpr int tak = 7;
inline constexpr int eos = 8;
} // namespace vocab

/// Ground-truth response: answer words, one SEG per frame, TAK, EOS.
std::vector<int> text_template(const Query& query, int frames);

/// Frame pixels scaled to [0, 1] as a 3 x H x W tensor.
Tensor frame_tensor(const VideoClip& clip, int t);

FrameFeatures encode_frames(const VideoClip& clip, std::span<const int> indices, const Model& model);
FrameFeatures encode_all_frames(const VideoClip& clip, const Model& model);

/// Query embedding row for an expression code.
ag::Var query_embedding(const Query& query, const Model& model);

TokenOutput encode_tokens(const FrameFeatures& features, const Query& query, const Model& model);

/// The projection MLP applied to one vector.
ag::Var project_vector(const ag::Var& x, const Model& model);
ProjectedTokenSet project_tokens(const RawTokenSet& raw, const Model& model);

/// Elementwise mean of equally sized vectors. Each channel is summed in
/// sorted order, so the result is exactly invariant to input order.
ag::Var order_invariant_mean(const std::vector<ag::Var>& vectors);

} // namespace ttvrs

#pragma once

// Toy promptable mask decoder.
//
// The prompt embedding is projected into a d_f-channel kernel that is dotted
// with every location of the stride-4 feature map; those coarse scores are
// upsampled (nearest) to full resolution. A second projection of the same
// embedding dots with the full-resolution skip features so edges can land
// between coarse cells. A third kernel weighs fixed sinusoidal position
// channels so a prompt can favour image regions. The occlusion head gates the pooled feature vector
// with a third projection and reduces it to one presence logit.

#include "ttvrs/autograd.hpp"
#include "ttvrs/model.hpp"

#include <cstdint>
#include <vector>

namespace ttvrs {

struct DecodeOutput {
    ag::Var logits;     // H x W
    ag::Var occlusion;  // {1}, higher means the target is present
    /// Per-location channel contributions to the coarse score, d_f x h x w.
    Tensor mask_embedding;
};

/// `map` is d_f x h x w, `fine` is fine_channels x (h*4) x (w*4), `embedding` is {d}.
DecodeOutput decode(const ag::Var& map, const ag::Var& fine, const ag::Var& embedding, const Model& model);

/// Fixed position channels, channels x h x w. For k = 1..channels/4 the
/// channels are sin(pi k u), cos(pi k u), sin(pi k v), cos(pi k v), where u and
/// v are cell-centre coordinates scaled to (-1, 1) along x and y.
Tensor positional_channels(int channels, int h, int w);

/// The occlusion head alone; decode() uses the same computation.
ag::Var occlusion_score(const ag::Var& map, const ag::Var& embedding, const Model& model);

/// 1 where sigmoid(logit) > tau.
std::vector<std::uint8_t> binarize(const Tensor& logits, double tau);

} // namespace ttvrs

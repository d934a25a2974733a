#pragma once

// Mask, text and occlusion losses and their weighted total.

#include "ttvrs/autograd.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ttvrs {

/// Mean stabilized binary cross-entropy of sigmoid(logits) against 0/1 targets.
ag::Var bce_loss(const ag::Var& logits, std::span<const std::uint8_t> target);

/// 1 - (2 sum(p t) + 1) / (sum p + sum t + 1), p = sigmoid(logits).
ag::Var dice_loss(const ag::Var& logits, std::span<const std::uint8_t> target);

/// Mean per-row softmax cross-entropy of an L x V logit matrix.
ag::Var text_loss(const ag::Var& logits, std::span<const int> target);

/// Mean BCE of per-frame presence logits against presence labels.
ag::Var occlusion_loss(const std::vector<ag::Var>& scores, std::span<const std::uint8_t> present);

struct LossWeights {
    double lambda_txt = 1.0;
    double lambda_mask = 1.0;
    double lambda_bce = 2.0;
    double lambda_dice = 0.5;
    double lambda_occ = 1.0;

    void validate() const;
};

struct LossComponents {
    double txt = 0.0;
    double bce = 0.0;
    double dice = 0.0;
    double occ = 0.0;
};

double total_loss(const LossComponents& c, const LossWeights& w);

/// Differentiable total over loss Vars (each a one-element Var).
ag::Var total_loss(const ag::Var& txt, const ag::Var& bce, const ag::Var& dice, const ag::Var& occ,
                   const LossWeights& w);

} // namespace ttvrs

#pragma once

// Similarity-weighted fusion of frame tokens into the clip token.

#include "ttvrs/autograd.hpp"
#include "ttvrs/encoder.hpp"

#include <span>
#include <vector>

namespace ttvrs {

struct AggregationConfig {
    double alpha = 0.1;
};

struct SimilarityWeights {
    ag::Var similarities;  // {T'} cosine(seg[i], tak)
    ag::Var weights;       // {T'} softmax of similarities
};

struct FusedToken {
    ag::Var vector;                    // {d}
    std::vector<double> weights;       // lambda_i
    std::vector<double> similarities;  // cosine before normalization
};

/// a.b / (|a||b|). Throws ZeroNormError on a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

SimilarityWeights similarity_weights(const ProjectedTokenSet& tokens);

/// tak + alpha * sum_i weights[i] * seg[i]; differentiable in seg and tak.
FusedToken aggregate(const ProjectedTokenSet& tokens, const AggregationConfig& config);

/// Index of the frame whose SEG token is closest (cosine) to TAK.
int training_keyframe(const ProjectedTokenSet& tokens);

/// Index of the maximum; ties go to the lowest index.
int argmax_lowest(std::span<const double> values);

} // namespace ttvrs

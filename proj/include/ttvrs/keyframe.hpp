#pragma once

// Inference-time keyframe selection: frame sampling, the query-frame anchor,
// per-frame occlusion scores, and the softmax-sum score combination.

#include "ttvrs/aggregation.hpp"
#include "ttvrs/encoder.hpp"
#include "ttvrs/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ttvrs {

enum class SamplingStrategy { random, uniform, anchor };

std::string to_string(SamplingStrategy s);
SamplingStrategy sampling_strategy_from_string(const std::string& s);

struct SamplingConfig {
    SamplingStrategy strategy = SamplingStrategy::anchor;
    int max_frames = 12;
    std::uint64_t seed = 0;
};

/// S1 (query/frame cosine), S2 (token similarity), S3 (occlusion).
struct ScoreCombo {
    bool use_clip = false;
    bool use_token_sim = true;
    bool use_occlusion = true;

    /// Parses "S2+S3", "S1+S2+S3", ... in any order.
    static ScoreCombo parse(const std::string& s);
    std::string label() const;
};

struct SelectionScores {
    std::vector<double> occlusion;             // S_o
    std::vector<double> occlusion_normalized;  // softmax(S_o)
    std::vector<double> token_similarity;      // S_t
    std::vector<double> clip;                  // S1
    std::vector<double> combined;
};

/// Cosine of the query embedding with each frame's pooled features.
std::vector<double> clip_scores(const FrameFeatures& features, const Query& query, const Model& model);

/// Frame most aligned with the query; ties go to the lowest index.
int anchor_frame(const VideoClip& clip, const Query& query, const Model& model);
int anchor_frame(const FrameFeatures& all_frames, const Query& query, const Model& model);

/// Sorted unique frame indices, min(max_frames, T) of them. Throws
/// std::invalid_argument when the anchor is missing for the anchor strategy
/// and std::out_of_range when it lies outside the clip.
std::vector<int> sample_frames(int num_frames, const SamplingConfig& config, std::optional<int> anchor = std::nullopt);

/// Occlusion score of every frame in `features` prompted by the fused token.
std::vector<double> occlusion_scores(const FrameFeatures& features, const FusedToken& fused, const Model& model);

std::vector<double> softmax(std::span<const double> v);

/// Sum of the softmax of each enabled score vector, then argmax (lowest on ties).
/// Fills scores.combined and scores.occlusion_normalized.
int select_keyframe(SelectionScores& scores, const ScoreCombo& combo);

} // namespace ttvrs

#pragma once

// Inference path: anchor sampling, token encoding, aggregation, keyframe
// selection and full-video propagation.

#include "ttvrs/keyframe.hpp"
#include "ttvrs/memory.hpp"
#include "ttvrs/metrics.hpp"
#include "ttvrs/synthetic.hpp"

namespace ttvrs {

struct InferenceConfig {
    double alpha = 0.1;
    SamplingConfig sampling;
    ScoreCombo combo;
    /// false: every frame decoded independently from the fused token.
    bool use_memory = true;
    int capacity = MemoryBank::default_capacity;
};

struct InferenceResult {
    Masklet masklet;
    int keyframe = 0;             // clip frame index
    int anchor = 0;               // clip frame index
    std::vector<int> sampled;     // clip frame indices
    SelectionScores scores;       // over the sampled frames
    FusedToken fused;
    PropagationResult propagation;
};

InferenceResult infer_video(const VideoClip& clip, const Query& query, const Model& model,
                            const InferenceConfig& config = {});

/// Copy whose parameters need no gradient, so forward passes build no graph
/// and can run concurrently.
Model frozen_copy(const Model& model);

/// Where predictions come from: the model, the ground truth itself, or an
/// all-background dummy.
enum class PredictionSource { model, oracle, zero };

std::string to_string(PredictionSource s);
PredictionSource prediction_source_from_string(const std::string& s);

struct EvalOptions {
    InferenceConfig inference;
    PredictionSource source = PredictionSource::model;
    int tolerance = 1;
    double epsilon = kDefaultHallucinationEpsilon;
    /// Upper bound on concurrently evaluated videos; 0 uses the OpenMP default.
    int threads = 0;
};

struct EvalOutput {
    MetricsReport report;
    std::vector<std::string> ids;     // manifest order
    std::vector<Masklet> predictions;
};

/// Runs inference and metrics over one split. `model` may be null unless the
/// source is PredictionSource::model. Results do not depend on `threads`.
EvalOutput evaluate_split(const DatasetManifest& manifest, const std::string& split, const Model* model,
                          const EvalOptions& options);

} // namespace ttvrs

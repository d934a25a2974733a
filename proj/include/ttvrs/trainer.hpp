#pragma once

// Per-clip training forward pass and the warmup gradient-descent loop.

#include "ttvrs/aggregation.hpp"
#include "ttvrs/losses.hpp"
#include "ttvrs/model.hpp"
#include "ttvrs/rng.hpp"
#include "ttvrs/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ttvrs {

/// Raised when a loss or parameter becomes NaN or infinite.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double learning_rate = 0.05;
    int iterations = 2500;
    int warmup = 100;
    int min_frames = 8;
    int max_frames = 12;
    std::uint64_t seed = 7;
    double grad_clip = 0.0;  // global-norm clip; 0 disables
    double alpha = 0.1;
    /// false: mask loss on the keyframe only (single-frame training).
    bool multi_frame = true;
    /// Probability of swapping a clip's query for one of its alternatives.
    double query_augmentation = 0.5;
    /// Probability of freezing a clip on one of its frames.
    double static_augmentation = 0.1;
    LossWeights weights;

    void validate() const;
};

struct QueryTarget {
    Query query;
    Masklet masklet;
};

/// One training example held in memory.
struct TrainSample {
    VideoClip clip;
    Masklet masklet;
    Query query;
    /// Other valid queries on the same clip, with their masklets.
    std::vector<QueryTarget> alternatives;
};

/// Colour queries for every other object of the scene that is visible in at
/// least one frame, rendered from the scene description.
std::vector<QueryTarget> alternative_queries(const SceneSpec& scene, const Query& query);

struct ClipLoss {
    ag::Var total;
    LossComponents components;
    int keyframe = 0;  // position within the sampled frames
};

/// encode -> tokens -> project -> aggregate -> training keyframe ->
/// train_adjacent propagation -> losses, over the frames `indices`.
ClipLoss clip_loss(const TrainSample& sample, std::span<const int> indices, const Model& model,
                   const TrainConfig& config);

struct LossRecord {
    int iteration = 0;
    double loss = 0.0;
    LossComponents components;
};

struct TrainResult {
    std::vector<LossRecord> trace;
};

/// Frames drawn for one step: a count in [min_frames, max_frames] capped at T,
/// chosen without replacement, sorted.
std::vector<int> training_frames(int num_frames, const TrainConfig& config, Rng& rng);

/// Trains `model` in place. `progress` (optional) is called after every step.
TrainResult train(Model& model, const std::vector<TrainSample>& samples, const TrainConfig& config,
                  const std::function<void(const LossRecord&)>& progress = {});

/// Loads a split; alternatives are filled from each entry's scene.
std::vector<TrainSample> load_samples(const DatasetManifest& manifest, const std::string& split);

/// Moving average over a trailing window (shorter at the start).
std::vector<double> smoothed(const std::vector<LossRecord>& trace, int window = 20);

void write_loss_csv(const std::filesystem::path& file, const std::vector<LossRecord>& trace);

} // namespace ttvrs

#include "ttvrs/pipeline.hpp"

#include <omp.h>

#include <exception>
#include <optional>
#include <stdexcept>

namespace ttvrs {

InferenceResult infer_video(const VideoClip& clip, const Query& query, const Model& model,
                            const InferenceConfig& config)
{
    InferenceResult out;
    const auto all = encode_all_frames(clip, model);
    out.anchor = anchor_frame(all, query, model);
    out.sampled = sample_frames(clip.num_frames, config.sampling, out.anchor);

    const auto sampled = all.select(out.sampled);
    const auto tokens = encode_tokens(sampled, query, model);
    const auto projected = project_tokens(tokens.raw, model);
    out.fused = aggregate(projected, {config.alpha});

    out.scores.token_similarity = out.fused.similarities;
    out.scores.occlusion = occlusion_scores(sampled, out.fused, model);
    if (config.combo.use_clip) out.scores.clip = clip_scores(sampled, query, model);
    out.keyframe = out.sampled[static_cast<std::size_t>(select_keyframe(out.scores, config.combo))];

    PropagationOptions opts;
    opts.mode = PropagationMode::full_video;
    opts.capacity = config.capacity;
    opts.use_memory = config.use_memory;
    out.propagation = propagate(all, out.keyframe, out.fused, model, opts);
    out.masklet = out.propagation.masklet(clip.height, clip.width);
    return out;
}

Model frozen_copy(const Model& model)
{
    Model out = model.clone();
    for (auto& e : out.params.entries()) e.var.node()->requires_grad = false;
    return out;
}

std::string to_string(PredictionSource s)
{
    switch (s) {
    case PredictionSource::model: return "model";
    case PredictionSource::oracle: return "oracle";
    case PredictionSource::zero: return "zero";
    }
    return "?";
}

PredictionSource prediction_source_from_string(const std::string& s)
{
    if (s == "model") return PredictionSource::model;
    if (s == "oracle") return PredictionSource::oracle;
    if (s == "zero") return PredictionSource::zero;
    throw std::invalid_argument("unknown prediction source '" + s + "'");
}

EvalOutput evaluate_split(const DatasetManifest& manifest, const std::string& split, const Model* model,
                          const EvalOptions& options)
{
    if (options.source == PredictionSource::model && !model)
        throw std::invalid_argument("model predictions need a model");
    const auto entries = manifest.split(split);
    const int n = static_cast<int>(entries.size());
    std::optional<Model> frozen;
    if (options.source == PredictionSource::model) frozen = frozen_copy(*model);

    EvalOutput out;
    out.predictions.resize(entries.size());
    std::vector<VideoMetrics> metrics(entries.size());
    std::vector<std::exception_ptr> errors(entries.size());
    const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int i = 0; i < n; ++i) {
        try {
            const auto& e = *entries[static_cast<std::size_t>(i)];
            const auto gt = manifest.load_masklet(e);
            Masklet pred;
            switch (options.source) {
            case PredictionSource::model:
                pred = infer_video(manifest.load_clip(e), e.query, *frozen, options.inference).masklet;
                break;
            case PredictionSource::oracle: pred = gt; break;
            case PredictionSource::zero: pred = Masklet(gt.num_frames, gt.height, gt.width); break;
            }
            metrics[i] = evaluate_video(e.id, e.query.subset(), pred, gt, e.query.is_negative(), options.tolerance,
                                        options.epsilon);
            out.predictions[i] = std::move(pred);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    for (const auto* e : entries) out.ids.push_back(e->id);
    out.report = MetricsReport::build(std::move(metrics));
    return out;
}

} // namespace ttvrs

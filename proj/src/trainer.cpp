#include "ttvrs/trainer.hpp"

#include "ttvrs/decoder.hpp"
#include "ttvrs/encoder.hpp"
#include "ttvrs/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace ttvrs {

void TrainConfig::validate() const
{
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning rate must be a finite non-negative number");
    if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
    if (warmup < 0) throw std::invalid_argument("warmup must be non-negative");
    if (min_frames < 1 || max_frames < min_frames)
        throw std::invalid_argument("frames per clip must satisfy 1 <= min_frames <= max_frames");
    if (grad_clip < 0.0) throw std::invalid_argument("grad_clip must be non-negative");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
    if (!(query_augmentation >= 0.0 && query_augmentation <= 1.0))
        throw std::invalid_argument("query_augmentation must lie in [0, 1]");
    if (!(static_augmentation >= 0.0 && static_augmentation <= 1.0))
        throw std::invalid_argument("static_augmentation must lie in [0, 1]");
    weights.validate();
}

ClipLoss clip_loss(const TrainSample& sample, std::span<const int> indices, const Model& model,
                   const TrainConfig& config)
{
    const auto features = encode_frames(sample.clip, indices, model);
    const auto tokens = encode_tokens(features, sample.query, model);
    const auto projected = project_tokens(tokens.raw, model);
    const auto fused = aggregate(projected, {config.alpha});
    const int key = training_keyframe(projected);

    PropagationOptions opts;
    opts.mode = PropagationMode::train_adjacent;
    std::vector<int> supervised{key};
    PropagationResult prop;
    if (config.multi_frame) {
        prop = propagate(features, key, fused, model, opts);
        supervised = prop.order;
    } else {
        prop.logits.resize(features.size());
        prop.logits[key] = decode(features.maps[key], features.fine[key], fused.vector, model).logits;
    }

    std::vector<ag::Var> bce, dice;
    for (int pos : supervised) {
        auto target = sample.masklet.frame(indices[pos]);
        bce.push_back(bce_loss(prop.logits[pos], target));
        dice.push_back(dice_loss(prop.logits[pos], target));
    }
    const double inv = 1.0 / static_cast<double>(supervised.size());
    auto l_bce = ag::scale(ag::sum(ag::stack_scalars(bce)), inv);
    auto l_dice = ag::scale(ag::sum(ag::stack_scalars(dice)), inv);

    std::vector<ag::Var> occ;
    std::vector<std::uint8_t> present;
    for (int pos = 0; pos < features.size(); ++pos) {
        occ.push_back(occlusion_score(features.maps[pos], fused.vector, model));
        present.push_back(sample.masklet.frame_empty(indices[pos]) ? 0 : 1);
    }
    auto l_occ = occlusion_loss(occ, present);
    auto l_txt = text_loss(tokens.text_logits, text_template(sample.query, features.size()));

    ClipLoss out;
    out.total = total_loss(l_txt, l_bce, l_dice, l_occ, config.weights);
    out.components = {l_txt.item(), l_bce.item(), l_dice.item(), l_occ.item()};
    out.keyframe = key;
    return out;
}

std::vector<int> training_frames(int num_frames, const TrainConfig& config, Rng& rng)
{
    const int count = std::min(rng.integer(config.min_frames, config.max_frames), num_frames);
    std::vector<int> all(static_cast<std::size_t>(num_frames));
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(std::span<int>(all));
    all.resize(static_cast<std::size_t>(count));
    std::ranges::sort(all);
    return all;
}

TrainResult train(Model& model, const std::vector<TrainSample>& samples, const TrainConfig& config,
                  const std::function<void(const LossRecord&)>& progress)
{
    config.validate();
    if (samples.empty()) throw std::invalid_argument("training set is empty");
    Rng rng(config.seed);
    std::vector<int> order;
    std::size_t cursor = 0;

    TrainResult result;
    for (int it = 0; it < config.iterations; ++it) {
        if (cursor == order.size()) {
            order.resize(samples.size());
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(std::span<int>(order));
            cursor = 0;
        }
        const auto& sample = samples[static_cast<std::size_t>(order[cursor++])];
        const auto frames = training_frames(sample.clip.num_frames, config, rng);
        // Always draw, so the random stream does not depend on the sample.
        const double u = rng.uniform();
        const int pick = rng.integer(0, std::max<int>(0, static_cast<int>(sample.alternatives.size()) - 1));
        TrainSample swapped;
        const TrainSample* use = &sample;
        if (!sample.alternatives.empty() && u < config.query_augmentation) {
            const auto& alt = sample.alternatives[static_cast<std::size_t>(pick)];
            swapped.clip = sample.clip;
            swapped.query = alt.query;
            swapped.masklet = alt.masklet;
            use = &swapped;
        }
        const double v = rng.uniform();
        const int still = frames[static_cast<std::size_t>(rng.integer(0, static_cast<int>(frames.size()) - 1))];
        if (v < config.static_augmentation) {
            if (use != &swapped) {
                swapped.query = sample.query;
                swapped.masklet = sample.masklet;
                swapped.clip = sample.clip;
                use = &swapped;
            }
            // Freeze the clip on one frame so memory-conditioned decoding learns to agree with the keyframe.
            for (int t = 0; t < swapped.clip.num_frames; ++t) {
                if (t == still) continue;
                std::ranges::copy(sample.clip.frame(still), swapped.clip.frame(t).begin());
                std::ranges::copy(swapped.masklet.frame(still), swapped.masklet.frame(t).begin());
            }
        }

        model.params.zero_grad();
        auto loss = clip_loss(*use, frames, model, config);
        const double value = loss.total.item();
        if (!std::isfinite(value))
            throw NumericError("non-finite loss at iteration " + std::to_string(it) + " (txt " +
                               std::to_string(loss.components.txt) + ", bce " + std::to_string(loss.components.bce) +
                               ", dice " + std::to_string(loss.components.dice) + ", occ " +
                               std::to_string(loss.components.occ) + ")");
        ag::backward(loss.total);

        double scale = config.warmup > 0 ? std::min(1.0, (it + 1.0) / config.warmup) : 1.0;
        scale *= config.learning_rate;
        if (config.grad_clip > 0.0) {
            double sq = 0.0;
            for (auto& e : model.params.entries())
                if (e.trainable && e.var.node()->has_grad())
                    for (double g : e.var.node()->grad.span()) sq += g * g;
            const double norm = std::sqrt(sq);
            if (norm > config.grad_clip) scale *= config.grad_clip / norm;
        }
        if (scale != 0.0)
            for (auto& e : model.params.entries()) {
                if (!e.trainable || !e.var.node()->has_grad()) continue;
                auto& w = e.var.mutable_value();
                const auto& g = e.var.node()->grad;
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= scale * g[i];
            }

        LossRecord rec{it, value, loss.components};
        result.trace.push_back(rec);
        if (progress) progress(rec);
    }
    model.params.zero_grad();
    return result;
}

std::vector<QueryTarget> alternative_queries(const SceneSpec& scene, const Query& query)
{
    std::vector<QueryTarget> out;
    for (int i = 0; i < static_cast<int>(scene.objects.size()); ++i) {
        if (query.target && *query.target == i) continue;
        Query q;
        q.kind = QueryKind::attribute;
        q.color_id = scene.objects[static_cast<std::size_t>(i)].color_id;
        q.target = i;
        auto masklet = generate_video(scene, q).masklet;
        if (std::ranges::all_of(masklet.masks, [](std::uint8_t v) { return v == 0; })) continue;
        out.push_back({q, std::move(masklet)});
    }
    return out;
}

std::vector<TrainSample> load_samples(const DatasetManifest& manifest, const std::string& split)
{
    std::vector<TrainSample> out;
    for (const auto* e : manifest.split(split))
        out.push_back({manifest.load_clip(*e), manifest.load_masklet(*e), e->query,
                       alternative_queries(e->scene, e->query)});
    return out;
}

std::vector<double> smoothed(const std::vector<LossRecord>& trace, int window)
{
    std::vector<double> out;
    double acc = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        acc += trace[i].loss;
        if (i >= static_cast<std::size_t>(window)) acc -= trace[i - window].loss;
        out.push_back(acc / static_cast<double>(std::min<std::size_t>(i + 1, window)));
    }
    return out;
}

void write_loss_csv(const std::filesystem::path& file, const std::vector<LossRecord>& trace)
{
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out.precision(17);
    out << "iteration,loss,l_txt,l_bce,l_dice,l_occ\n";
    for (const auto& r : trace)
        out << r.iteration << ',' << r.loss << ',' << r.components.txt << ',' << r.components.bce << ','
            << r.components.dice << ',' << r.components.occ << '\n';
}

} // namespace ttvrs

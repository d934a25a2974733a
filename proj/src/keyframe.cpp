#include "ttvrs/keyframe.hpp"

#include "ttvrs/decoder.hpp"
#include "ttvrs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ttvrs {

std::string to_string(SamplingStrategy s)
{
    switch (s) {
    case SamplingStrategy::random: return "random";
    case SamplingStrategy::uniform: return "uniform";
    case SamplingStrategy::anchor: return "anchor";
    }
    return "?";
}

SamplingStrategy sampling_strategy_from_string(const std::string& s)
{
    if (s == "random") return SamplingStrategy::random;
    if (s == "uniform") return SamplingStrategy::uniform;
    if (s == "anchor" || s == "clip") return SamplingStrategy::anchor;
    throw std::invalid_argument("unknown sampling strategy '" + s + "'");
}

ScoreCombo ScoreCombo::parse(const std::string& s)
{
    ScoreCombo c{false, false, false};
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto end = std::min(s.find('+', pos), s.size());
        const std::string tok = s.substr(pos, end - pos);
        if (tok == "S1") c.use_clip = true;
        else if (tok == "S2") c.use_token_sim = true;
        else if (tok == "S3") c.use_occlusion = true;
        else throw std::invalid_argument("unknown score '" + tok + "' in combo '" + s + "'");
        pos = end + 1;
    }
    return c;
}

std::string ScoreCombo::label() const
{
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += "+";
        out += name;
    };
    add(use_clip, "S1");
    add(use_token_sim, "S2");
    add(use_occlusion, "S3");
    return out;
}

std::vector<double> clip_scores(const FrameFeatures& features, const Query& query, const Model& model)
{
    const auto q = query_embedding(query, model);
    std::vector<double> out;
    for (const auto& p : features.pooled) out.push_back(cosine_similarity(q.value().span(), p.value().span()));
    return out;
}

int anchor_frame(const FrameFeatures& all_frames, const Query& query, const Model& model)
{
    return argmax_lowest(clip_scores(all_frames, query, model));
}

int anchor_frame(const VideoClip& clip, const Query& query, const Model& model)
{
    if (clip.num_frames < 1) throw std::invalid_argument("anchor_frame on an empty clip");
    return anchor_frame(encode_all_frames(clip, model), query, model);
}

std::vector<int> sample_frames(int num_frames, const SamplingConfig& config, std::optional<int> anchor)
{
    if (num_frames < 1) throw std::invalid_argument("cannot sample from an empty clip");
    if (config.max_frames < 1) throw std::invalid_argument("max_frames must be at least 1");
    if (config.strategy == SamplingStrategy::anchor) {
        if (!anchor) throw std::invalid_argument("anchor sampling needs an anchor frame");
        if (*anchor < 0 || *anchor >= num_frames) throw std::out_of_range("anchor frame outside the clip");
    }
    const int n = std::min(config.max_frames, num_frames);
    std::vector<int> out;
    if (n == num_frames) {
        out.resize(static_cast<std::size_t>(n));
        std::iota(out.begin(), out.end(), 0);
        return out;
    }
    if (config.strategy == SamplingStrategy::random) {
        std::vector<int> all(static_cast<std::size_t>(num_frames));
        std::iota(all.begin(), all.end(), 0);
        Rng rng(config.seed);
        rng.shuffle(std::span<int>(all));
        out.assign(all.begin(), all.begin() + n);
        std::ranges::sort(out);
        return out;
    }
    for (int i = 0; i < n; ++i)
        out.push_back(n == 1 ? 0 : static_cast<int>((static_cast<long>(i) * (num_frames - 1)) / (n - 1)));
    if (config.strategy == SamplingStrategy::anchor) {
        // Replace the nearest sample (lowest on ties) with the anchor.
        int nearest = 0;
        for (int i = 1; i < n; ++i)
            if (std::abs(out[i] - *anchor) < std::abs(out[nearest] - *anchor)) nearest = i;
        out[nearest] = *anchor;
        std::ranges::sort(out);
    }
    return out;
}

std::vector<double> occlusion_scores(const FrameFeatures& features, const FusedToken& fused, const Model& model)
{
    std::vector<double> out;
    for (const auto& map : features.maps) out.push_back(occlusion_score(map, fused.vector, model).item());
    return out;
}

std::vector<double> softmax(std::span<const double> v)
{
    std::vector<double> out(v.begin(), v.end());
    if (out.empty()) return out;
    const double mx = *std::ranges::max_element(out);
    double z = 0.0;
    for (auto& x : out) {
        x = std::exp(x - mx);
        z += x;
    }
    for (auto& x : out) x /= z;
    return out;
}

int select_keyframe(SelectionScores& scores, const ScoreCombo& combo)
{
    if (!combo.use_clip && !combo.use_token_sim && !combo.use_occlusion)
        throw std::invalid_argument("score combination enables no score");
    std::size_t n = 0;
    auto check = [&](bool on, const std::vector<double>& v, const char* name) {
        if (!on) return;
        if (v.empty()) throw std::invalid_argument(std::string("score vector ") + name + " is missing");
        if (n == 0) n = v.size();
        if (v.size() != n) throw std::invalid_argument("score vectors differ in length");
    };
    check(combo.use_clip, scores.clip, "S1");
    check(combo.use_token_sim, scores.token_similarity, "S2");
    check(combo.use_occlusion, scores.occlusion, "S3");

    scores.occlusion_normalized = softmax(scores.occlusion);
    scores.combined.assign(n, 0.0);
    auto accumulate = [&](bool on, const std::vector<double>& v) {
        if (!on) return;
        const auto p = softmax(v);
        for (std::size_t i = 0; i < n; ++i) scores.combined[i] += p[i];
    };
    accumulate(combo.use_clip, scores.clip);
    accumulate(combo.use_token_sim, scores.token_similarity);
    accumulate(combo.use_occlusion, scores.occlusion);
    return argmax_lowest(scores.combined);
}

} // namespace ttvrs

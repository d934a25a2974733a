#include "ttvrs/memory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ttvrs {

MemoryBank::MemoryBank(int capacity) : capacity_(capacity)
{
    if (capacity < 1) throw std::invalid_argument("memory bank capacity must be at least 1");
}

void MemoryBank::push(MemoryEntry entry)
{
    if (size() == capacity_) entries_.pop_front();
    entries_.push_back(std::move(entry));
}

Tensor downsample_mask(std::span<const std::uint8_t> mask, int height, int width, int factor)
{
    if (height % factor != 0 || width % factor != 0 || mask.size() != static_cast<std::size_t>(height) * width)
        throw ShapeError("downsample_mask: mask does not tile into " + std::to_string(factor) + "-pixel blocks");
    std::vector<double> src(mask.begin(), mask.end());
    Tensor out({1, height / factor, width / factor});
    kernels::omp::block_sum(src, out.span(), 1, height / factor, width / factor, factor);
    const double inv = 1.0 / (factor * factor);
    for (auto& v : out.span()) v *= inv;
    return out;
}

MemoryEntry encode_memory(int frame, const ag::Var& features, std::span<const std::uint8_t> mask, int height,
                          int width, const Model& model)
{
    const Tensor& f = features.value();
    const int df = model.dims.feature_dim;
    if (f.rank() != 3 || f.dim(0) != df || f.dim(1) * ModelDims::stride != height ||
        f.dim(2) * ModelDims::stride != width)
        throw ShapeError("encode_memory: features " + shape_str(f.shape()) + " do not match a " +
                         std::to_string(height) + "x" + std::to_string(width) + " mask");
    const int h = f.dim(1), w = f.dim(2);
    auto m = ag::constant(downsample_mask(mask, height, width, ModelDims::stride));
    auto stacked = ag::reshape(ag::concat({ag::reshape(features, {df * h * w}), ag::reshape(m, {h * w})}),
                               {df + 1, h, w});
    return {frame, ag::tanh(ag::conv2d(stacked, model.p("mem.enc.w"), model.p("mem.enc.b"), 1, 1))};
}

ag::Var attend(const ag::Var& features, const MemoryBank& bank, const Model& model)
{
    if (bank.empty()) return features;
    const Tensor& f = features.value();
    const int df = f.dim(0), h = f.dim(1), w = f.dim(2);
    auto flat = ag::reshape(features, {df, h * w});
    std::vector<ag::Var> mems;
    for (const auto& e : bank.entries()) {
        if (e.memory.value().shape() != f.shape())
            throw ShapeError("attend: memory " + shape_str(e.memory.shape()) + " vs features " + shape_str(f.shape()));
        mems.push_back(ag::reshape(e.memory, {df, h * w}));
    }
    auto mem = ag::hcat(mems);  // df x (n * h * w)
    auto q = ag::matmul(model.p("mem.q.w"), flat);
    auto k = ag::matmul(model.p("mem.k.w"), mem);
    auto v = ag::matmul(model.p("mem.v.w"), mem);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(model.dims.key_dim));
    auto attn = ag::row_softmax(ag::scale(ag::matmul(ag::transpose(q), k), inv_sqrt));  // hw x n*hw
    auto read = ag::matmul(v, ag::transpose(attn));                                     // df x hw
    return ag::reshape(ag::add(flat, read), {df, h, w});
}

std::vector<int> propagation_order(int num_frames, int keyframe, PropagationMode mode)
{
    if (keyframe < 0 || keyframe >= num_frames)
        throw std::out_of_range("keyframe " + std::to_string(keyframe) + " outside [0, " +
                                std::to_string(num_frames) + ")");
    std::vector<int> out;
    if (mode == PropagationMode::train_adjacent) {
        if (num_frames < 3) {
            for (int t = 0; t < num_frames; ++t)
                if (t != keyframe) out.push_back(t);
        } else if (keyframe == 0) {
            out = {1, 2};
        } else if (keyframe == num_frames - 1) {
            out = {num_frames - 2, num_frames - 3};
        } else {
            out = {keyframe + 1, keyframe - 1};
        }
        return out;
    }
    for (int d = 1; d < num_frames; ++d) {
        if (keyframe + d < num_frames) out.push_back(keyframe + d);
        if (keyframe - d >= 0) out.push_back(keyframe - d);
    }
    return out;
}

Masklet PropagationResult::masklet(int height, int width) const
{
    Masklet m(static_cast<int>(masks.size()), height, width);
    for (std::size_t t = 0; t < masks.size(); ++t) {
        if (masks[t].empty()) throw std::logic_error("frame " + std::to_string(t) + " was not propagated");
        std::copy(masks[t].begin(), masks[t].end(), m.frame(static_cast<int>(t)).begin());
    }
    return m;
}

PropagationResult propagate(const FrameFeatures& features, int keyframe, const FusedToken& fused,
                            const Model& model, const PropagationOptions& options)
{
    const int n = features.size();
    const auto order = propagation_order(n, keyframe, options.mode);
    const int height = features.fine.at(0).value().dim(1), width = features.fine.at(0).value().dim(2);

    PropagationResult out;
    out.keyframe = keyframe;
    out.masks.resize(n);
    out.logits.resize(n);
    out.occlusion.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.mask_embeddings.resize(n);
    MemoryBank bank(options.capacity);

    auto step = [&](int pos, bool conditioned) {
        auto map = conditioned && options.use_memory ? attend(features.maps[pos], bank, model) : features.maps[pos];
        auto dec = decode(map, features.fine[pos], fused.vector, model);
        out.masks[pos] = binarize(dec.logits.value(), model.tau());
        out.occlusion[pos] = dec.occlusion.item();
        out.logits[pos] = dec.logits;
        out.mask_embeddings[pos] = std::move(dec.mask_embedding);
        out.order.push_back(pos);
        if (options.use_memory)
            bank.push(encode_memory(features.indices[pos], features.maps[pos], out.masks[pos], height, width, model));
    };
    step(keyframe, false);
    for (int pos : order) step(pos, true);
    out.bank_size = bank.size();
    return out;
}

PropagationResult propagate(const VideoClip& clip, int keyframe, const FusedToken& fused, const Model& model,
                            const PropagationOptions& options)
{
    if (keyframe < 0 || keyframe >= clip.num_frames)
        throw std::out_of_range("keyframe outside the clip");
    return propagate(encode_all_frames(clip, model), keyframe, fused, model, options);
}

std::string to_string(PropagationMode m)
{
    return m == PropagationMode::train_adjacent ? "train_adjacent" : "full_video";
}

} // namespace ttvrs

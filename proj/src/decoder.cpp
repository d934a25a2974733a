#include "ttvrs/decoder.hpp"

#include <cmath>

namespace ttvrs {

ag::Var occlusion_score(const ag::Var& map, const ag::Var& embedding, const Model& model)
{
    if (map.value().rank() != 3 || map.value().dim(0) != model.dims.feature_dim)
        throw ShapeError("occlusion_score: feature map " + shape_str(map.shape()));
    auto pooled = ag::mean_cols(map);
    auto gate = ag::linear(model.p("dec.gate.w"), embedding, model.p("dec.gate.b"));
    return ag::add(ag::dot(model.p("dec.occ.w"), ag::mul(pooled, gate)), model.p("dec.occ.b"));
}

Tensor positional_channels(int channels, int h, int w)
{
    if (channels % 4 != 0) throw ShapeError("positional_channels: channel count must be a multiple of 4");
    constexpr double pi = 3.14159265358979323846;
    Tensor out({channels, h, w});
    const std::size_t n = static_cast<std::size_t>(h) * w;
    for (int k = 1; k <= channels / 4; ++k) {
        const std::size_t base = static_cast<std::size_t>(k - 1) * 4 * n;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double u = (x + 0.5) / w * 2.0 - 1.0, v = (y + 0.5) / h * 2.0 - 1.0;
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                out[base + i] = std::sin(pi * k * u);
                out[base + n + i] = std::cos(pi * k * u);
                out[base + 2 * n + i] = std::sin(pi * k * v);
                out[base + 3 * n + i] = std::cos(pi * k * v);
            }
    }
    return out;
}

DecodeOutput decode(const ag::Var& map, const ag::Var& fine, const ag::Var& embedding, const Model& model)
{
    const Tensor& mv = map.value();
    const Tensor& fv = fine.value();
    if (mv.rank() != 3 || mv.dim(0) != model.dims.feature_dim)
        throw ShapeError("decode: feature map " + shape_str(mv.shape()));
    const int h = mv.dim(1), w = mv.dim(2);
    const int s = ModelDims::stride;
    if (fv.rank() != 3 || fv.dim(0) != model.dims.fine_channels || fv.dim(1) != h * s || fv.dim(2) != w * s)
        throw ShapeError("decode: fine features " + shape_str(fv.shape()) + " do not match map " + shape_str(mv.shape()));
    if (static_cast<int>(embedding.size()) != model.dims.token_dim)
        throw ShapeError("decode: embedding " + shape_str(embedding.shape()));

    const int df = model.dims.feature_dim;
    auto kernel = ag::linear(model.p("dec.kernel.w"), embedding, model.p("dec.kernel.b"));
    auto coarse = ag::matmul(ag::reshape(kernel, {1, df}), map);  // 1 x (h*w)
    if (const int pc = model.dims.pos_channels; pc > 0) {
        auto pos_kernel = ag::linear(model.p("dec.pos.w"), embedding, model.p("dec.pos.b"));
        auto pos = ag::constant(positional_channels(pc, h, w));
        coarse = ag::add(coarse, ag::matmul(ag::reshape(pos_kernel, {1, pc}), pos));
    }
    auto coarse_up = ag::upsample_nearest(ag::reshape(coarse, {h, w}), s);

    const int cf = model.dims.fine_channels;
    auto fine_kernel = ag::linear(model.p("dec.fine.w"), embedding, model.p("dec.fine.b"));
    auto fine_score = ag::reshape(ag::matmul(ag::reshape(fine_kernel, {1, cf}), fine), {h * s, w * s});

    DecodeOutput out;
    out.logits = ag::add_scalar(ag::add(coarse_up, fine_score), model.p("dec.mask_bias"));
    out.occlusion = occlusion_score(map, embedding, model);

    out.mask_embedding = Tensor(mv.shape());
    const std::size_t n = static_cast<std::size_t>(h) * w;
    for (int c = 0; c < df; ++c)
        for (std::size_t i = 0; i < n; ++i) out.mask_embedding[c * n + i] = mv[c * n + i] * kernel.value()[c];
    return out;
}

std::vector<std::uint8_t> binarize(const Tensor& logits, double tau)
{
    std::vector<std::uint8_t> mask(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) mask[i] = 1.0 / (1.0 + std::exp(-logits[i])) > tau ? 1 : 0;
    return mask;
}

} // namespace ttvrs

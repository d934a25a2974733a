#include "ttvrs/encoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace ttvrs {

FrameFeatures FrameFeatures::select(std::span<const int> pos) const
{
    FrameFeatures out;
    for (int p : pos) {
        out.indices.push_back(indices.at(p));
        out.maps.push_back(maps.at(p));
        out.fine.push_back(fine.at(p));
        out.pooled.push_back(pooled.at(p));
    }
    return out;
}

std::vector<int> text_template(const Query& query, int frames)
{
    int word = vocab::word_color;
    if (query.kind == QueryKind::spatial_order) word = vocab::word_position;
    if (query.kind == QueryKind::motion_rank) word = vocab::word_motion;
    std::vector<int> out{vocab::sure, vocab::it_is, word};
    out.insert(out.end(), static_cast<std::size_t>(frames), vocab::seg);
    out.push_back(vocab::tak);
    out.push_back(vocab::eos);
    return out;
}

namespace {

// Template slot roles: two answer words, the kind word, SEG, TAK, EOS.
std::vector<int> template_roles(int frames)
{
    std::vector<int> roles{0, 1, 2};
    roles.insert(roles.end(), static_cast<std::size_t>(frames), 3);
    roles.push_back(4);
    roles.push_back(5);
    return roles;
}

} // namespace

Tensor frame_tensor(const VideoClip& clip, int t)
{
    Tensor x({3, clip.height, clip.width});
    auto f = clip.frame(t);
    for (std::size_t i = 0; i < f.size(); ++i) x[i] = f[i] / 255.0;
    return x;
}

FrameFeatures encode_frames(const VideoClip& clip, std::span<const int> indices, const Model& model)
{
    if (clip.height % ModelDims::stride != 0 || clip.width % ModelDims::stride != 0)
        throw ShapeError("frame size must be a multiple of the encoder stride");
    FrameFeatures out;
    for (int t : indices) {
        if (t < 0 || t >= clip.num_frames)
            throw std::out_of_range("frame index " + std::to_string(t) + " outside [0, " +
                                    std::to_string(clip.num_frames) + ")");
        auto x = ag::constant(frame_tensor(clip, t));
        auto h1 = ag::tanh(ag::conv2d(x, model.p("enc.conv1.w"), model.p("enc.conv1.b"), 2, 1));
        auto h2 = ag::tanh(ag::conv2d(h1, model.p("enc.conv2.w"), model.p("enc.conv2.b"), 2, 1));
        auto fine = ag::tanh(ag::conv2d(x, model.p("enc.fine.w"), model.p("enc.fine.b"), 1, 0));
        out.indices.push_back(t);
        out.pooled.push_back(ag::mean_cols(h2));
        out.maps.push_back(std::move(h2));
        out.fine.push_back(std::move(fine));
    }
    return out;
}

FrameFeatures encode_all_frames(const VideoClip& clip, const Model& model)
{
    std::vector<int> all(static_cast<std::size_t>(clip.num_frames));
    for (int t = 0; t < clip.num_frames; ++t) all[t] = t;
    return encode_frames(clip, all, model);
}

ag::Var query_embedding(const Query& query, const Model& model)
{
    const auto& table = model.p("enc.query_embed");
    const int code = query.expression_code();
    if (code < 0 || code >= table.value().rows())
        throw std::out_of_range("expression code " + std::to_string(code) + " has no embedding");
    return ag::row(table, code);
}

ag::Var order_invariant_mean(const std::vector<ag::Var>& vectors)
{
    if (vectors.empty()) throw ShapeError("mean of no vectors");
    const std::size_t n = vectors[0].size();
    Tensor out({static_cast<int>(n)});
    std::vector<double> column(vectors.size());
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (vectors[i].size() != n) throw ShapeError("order_invariant_mean: ragged inputs");
            column[i] = vectors[i].value()[c];
        }
        std::ranges::sort(column);
        double acc = 0.0;
        for (double v : column) acc += v;
        out[c] = acc / static_cast<double>(vectors.size());
    }
    const double inv = 1.0 / static_cast<double>(vectors.size());
    return ag::make_op(std::move(out), vectors, [inv](ag::Node& self) {
        for (auto& p : self.parents)
            if (p->requires_grad) {
                auto& g = p->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += inv * self.grad[i];
            }
    });
}

TokenOutput encode_tokens(const FrameFeatures& features, const Query& query, const Model& model)
{
    if (features.size() == 0) throw ShapeError("encode_tokens needs at least one frame");
    const auto q = query_embedding(query, model);

    std::vector<ag::Var> seg_rows;
    for (const auto& pooled : features.pooled)
        seg_rows.push_back(ag::tanh(ag::linear(model.p("enc.seg.w"), ag::concat({pooled, q}), model.p("enc.seg.b"))));

    const auto clip_mean = order_invariant_mean(features.pooled);
    auto tak = ag::tanh(ag::linear(model.p("enc.tak.w"), ag::concat({clip_mean, q}), model.p("enc.tak.b")));

    std::vector<ag::Var> logit_rows;
    for (int role : template_roles(features.size())) {
        auto h = ag::tanh(ag::linear(model.p("enc.txt.h.w"), ag::concat({tak, ag::row(model.p("enc.txt.role"), role)}),
                                     model.p("enc.txt.h.b")));
        logit_rows.push_back(ag::linear(model.p("enc.txt.out.w"), h, model.p("enc.txt.out.b")));
    }
    return {{ag::stack_rows(seg_rows), tak}, ag::stack_rows(logit_rows)};
}

ag::Var project_vector(const ag::Var& x, const Model& model)
{
    ag::Var h = x;
    for (int l = 0; l < model.dims.proj_layers; ++l) {
        const std::string base = "proj." + std::to_string(l);
        h = ag::linear(model.p(base + ".w"), h, model.p(base + ".b"));
        if (l + 1 < model.dims.proj_layers) h = ag::tanh(h);
    }
    return h;
}

ProjectedTokenSet project_tokens(const RawTokenSet& raw, const Model& model)
{
    std::vector<ag::Var> rows;
    for (int i = 0; i < raw.seg.value().rows(); ++i) rows.push_back(project_vector(ag::row(raw.seg, i), model));
    return {ag::stack_rows(rows), project_vector(raw.tak, model)};
}

} // namespace ttvrs

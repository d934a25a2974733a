#pragma once

#include "ttvrs/model.hpp"
#include "ttvrs/rng.hpp"
#include "ttvrs/synthetic.hpp"

namespace testing_support {

/// Micro model with non-zero biases so every parameter affects the output.
inline ttvrs::Model micro_model(std::uint64_t seed, double range = 0.5)
{
    auto m = ttvrs::init_model(ttvrs::ModelDims::micro(), seed, range);
    ttvrs::Rng rng(seed + 1000);
    for (auto& e : m.params.entries())
        if (e.trainable)
            for (auto& v : e.var.mutable_value().span())
                if (v == 0.0) v = rng.uniform(-range, range);
    return m;
}

/// A short, small random clip with a valid query.
inline ttvrs::GeneratedVideo micro_video(std::uint64_t seed, ttvrs::Query* query, int frames = 3, int size = 16,
                                         ttvrs::QueryKind kind = ttvrs::QueryKind::attribute)
{
    ttvrs::SceneOptions o;
    o.width = o.height = size;
    o.num_frames = frames;
    auto sq = ttvrs::random_scene(kind, seed, o);
    if (query) *query = sq.query;
    return ttvrs::generate_video(sq.spec, sq.query);
}

} // namespace testing_support

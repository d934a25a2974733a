#include "ttvrs/memory.hpp"

#include "oracles.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <set>

using namespace ttvrs;
using testing_support::micro_model;
using testing_support::micro_video;

namespace {

Tensor random_tensor(Rng& rng, Shape s)
{
    Tensor t(std::move(s));
    for (auto& v : t.span()) v = rng.uniform(-1.0, 1.0);
    return t;
}

FusedToken fused_for(const FrameFeatures& f, const Query& q, const Model& m)
{
    return aggregate(project_tokens(encode_tokens(f, q, m).raw, m), {0.1});
}

} // namespace

TEST_CASE("FIFO keeps the last N entries in order")
{
    for (int cap = 1; cap <= 5; ++cap) {
        MemoryBank bank(cap);
        for (int i = 0; i <= cap; ++i) bank.push({i, ag::constant(Tensor({1, 1, 1}))});
        REQUIRE(bank.size() == cap);
        for (int i = 0; i < cap; ++i) CHECK(bank.entries()[i].frame == i + 1);
    }
    CHECK_THROWS_AS(MemoryBank(0), std::invalid_argument);
}

TEST_CASE("encode_memory matches the dense convolution oracle")
{
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = micro_model(trial);
        const int h = rng.integer(1, 3), w = rng.integer(1, 3);
        auto f = random_tensor(rng, {m.dims.feature_dim, h, w});
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(16) * h * w);
        for (auto& v : mask) v = rng.uniform() < 0.5 ? 1 : 0;
        auto e = encode_memory(3, ag::constant(f), mask, 4 * h, 4 * w, m);
        auto ref = oracle::encode_memory(f, mask, 4 * h, 4 * w, m);
        CHECK(e.frame == 3);
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(e.memory.value()[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
}

TEST_CASE("zero features, zero mask and zero biases give zero memory")
{
    auto m = micro_model(2);
    m.params.get("mem.enc.b").mutable_value().fill(0.0);
    std::vector<std::uint8_t> mask(64, 0);
    auto e = encode_memory(0, ag::constant(Tensor({8, 2, 2})), mask, 8, 8, m);
    for (double v : e.memory.value().span()) CHECK(v == 0.0);
    CHECK_THROWS_AS(encode_memory(0, ag::constant(Tensor({8, 2, 2})), mask, 8, 12, m), ShapeError);
}

TEST_CASE("attention matches the hand-rolled oracle")
{
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = micro_model(100 + trial);
        const int h = rng.integer(1, 3), w = rng.integer(1, 3);
        auto f = random_tensor(rng, {8, h, w});
        MemoryBank bank(4);
        std::vector<oracle::Vec> mems;
        const int entries = rng.integer(1, 4);
        for (int i = 0; i < entries; ++i) {
            auto mem = random_tensor(rng, {8, h, w});
            mems.push_back(oracle::raw(mem));
            bank.push({i, ag::constant(mem)});
        }
        auto out = attend(ag::constant(f), bank, m);
        auto ref = oracle::attend(f, mems, m);
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(out.value()[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
}

TEST_CASE("empty bank and zero values leave features unchanged")
{
    auto m = micro_model(4);
    Rng rng(4);
    auto f = ag::constant(random_tensor(rng, {8, 2, 2}));
    MemoryBank bank;
    CHECK(attend(f, bank, m).value().raw() == f.value().raw());
    bank.push({0, ag::constant(Tensor({8, 2, 2}))});
    m.params.get("mem.v.w").mutable_value().fill(0.0);
    CHECK(attend(f, bank, m).value().raw() == f.value().raw());
}

TEST_CASE("propagation order")
{
    CHECK(propagation_order(16, 0, PropagationMode::train_adjacent) == std::vector<int>{1, 2});
    CHECK(propagation_order(16, 15, PropagationMode::train_adjacent) == std::vector<int>{14, 13});
    CHECK(propagation_order(16, 7, PropagationMode::train_adjacent) == std::vector<int>{8, 6});
    CHECK(propagation_order(5, 1, PropagationMode::full_video) == std::vector<int>{2, 0, 3, 4});
    CHECK(propagation_order(1, 0, PropagationMode::full_video).empty());
    CHECK_THROWS_AS(propagation_order(4, 4, PropagationMode::full_video), std::out_of_range);
    for (int t = 1; t <= 17; ++t)
        for (int k = 0; k < t; ++k) {
            auto o = propagation_order(t, k, PropagationMode::full_video);
            std::set<int> seen(o.begin(), o.end());
            seen.insert(k);
            CHECK(static_cast<int>(o.size()) == t - 1);
            CHECK(static_cast<int>(seen.size()) == t);
        }
}

TEST_CASE("keyframe mask is identical standalone and inside propagate")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = micro_model(seed);
        Query q;
        auto v = micro_video(seed, &q, 6, 16);
        auto f = encode_all_frames(v.clip, m);
        auto fused = fused_for(f, q, m);
        for (int k : {0, 3, 5}) {
            auto r = propagate(f, k, fused, m);
            auto alone = binarize(decode(f.maps[k], f.fine[k], fused.vector, m).logits.value(), m.tau());
            CHECK(r.masks[k] == alone);
            CHECK(r.order.front() == k);
            CHECK(r.order.size() == 6);
            CHECK(r.bank_size == std::min(6, MemoryBank::default_capacity));
            CHECK_NOTHROW(r.masklet(16, 16));
        }
    }
}

TEST_CASE("single-frame clips and train_adjacent coverage")
{
    const auto m = micro_model(7);
    Query q;
    auto v = micro_video(7, &q, 1, 16);
    auto f = encode_all_frames(v.clip, m);
    auto r = propagate(f, 0, fused_for(f, q, m), m);
    CHECK(r.bank_size == 1);
    CHECK(r.masklet(16, 16).num_frames == 1);

    auto v6 = micro_video(8, &q, 6, 16);
    auto f6 = encode_all_frames(v6.clip, m);
    PropagationOptions o;
    o.mode = PropagationMode::train_adjacent;
    auto ra = propagate(f6, 0, fused_for(f6, q, m), m, o);
    CHECK(ra.order == std::vector<int>{0, 1, 2});
    CHECK(ra.masks[3].empty());
    CHECK_THROWS_AS(ra.masklet(16, 16), std::logic_error);
    CHECK_THROWS_AS(propagate(f6, 6, fused_for(f6, q, m), m), std::out_of_range);
}

TEST_CASE("without memory every frame decodes independently")
{
    const auto m = micro_model(9);
    Query q;
    auto v = micro_video(9, &q, 5, 16);
    auto f = encode_all_frames(v.clip, m);
    auto fused = fused_for(f, q, m);
    PropagationOptions o;
    o.use_memory = false;
    auto r = propagate(f, 2, fused, m, o);
    CHECK(r.bank_size == 0);
    for (int t = 0; t < 5; ++t)
        CHECK(r.masks[t] == binarize(decode(f.maps[t], f.fine[t], fused.vector, m).logits.value(), m.tau()));
}

#include "ttvrs/decoder.hpp"
#include "ttvrs/keyframe.hpp"

#include "oracles.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <set>

using namespace ttvrs;

TEST_CASE("uniform sampling")
{
    SamplingConfig c;
    c.strategy = SamplingStrategy::uniform;
    c.max_frames = 4;
    CHECK(sample_frames(16, c) == std::vector<int>{0, 5, 10, 15});
    c.max_frames = 1;
    CHECK(sample_frames(16, c) == std::vector<int>{0});
    c.max_frames = 12;
    CHECK(sample_frames(5, c) == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("anchor sampling always contains the anchor")
{
    SamplingConfig c;
    c.strategy = SamplingStrategy::anchor;
    for (int t = 2; t <= 20; ++t)
        for (int m = 1; m <= 12; ++m)
            for (int a = 0; a < t; ++a) {
                c.max_frames = m;
                auto s = sample_frames(t, c, a);
                CHECK(static_cast<int>(s.size()) == std::min(m, t));
                CHECK(std::is_sorted(s.begin(), s.end()));
                CHECK(std::set<int>(s.begin(), s.end()).size() == s.size());
                CHECK(std::find(s.begin(), s.end(), a) != s.end());
            }
}

TEST_CASE("random sampling is seeded, sorted and unique")
{
    SamplingConfig c;
    c.strategy = SamplingStrategy::random;
    c.max_frames = 6;
    c.seed = 11;
    auto a = sample_frames(16, c), b = sample_frames(16, c);
    CHECK(a == b);
    CHECK(a.size() == 6);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::set<int>(a.begin(), a.end()).size() == 6);
    for (int v : a) CHECK((v >= 0 && v < 16));
}

TEST_CASE("sampling errors")
{
    SamplingConfig c;
    c.strategy = SamplingStrategy::anchor;
    CHECK_THROWS_AS(sample_frames(8, c), std::invalid_argument);
    CHECK_THROWS_AS(sample_frames(8, c, 8), std::out_of_range);
    CHECK_THROWS_AS(sample_frames(0, c, 0), std::invalid_argument);
    CHECK_THROWS_AS(sampling_strategy_from_string("nearest"), std::invalid_argument);
}

TEST_CASE("score combination matches the softmax-sum oracle")
{
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rng.integer(1, 12);
        SelectionScores s;
        s.clip = oracle::random_vec(rng, n);
        s.token_similarity = oracle::random_vec(rng, n);
        s.occlusion = oracle::random_vec(rng, n, -5.0, 5.0);
        ScoreCombo combo{rng.uniform() < 0.5, rng.uniform() < 0.5, rng.uniform() < 0.5};
        if (!combo.use_clip && !combo.use_token_sim && !combo.use_occlusion) combo.use_occlusion = true;
        const int k = select_keyframe(s, combo);
        oracle::Vec total(n, 0.0);
        if (combo.use_clip) total = oracle::add(total, oracle::softmax(s.clip));
        if (combo.use_token_sim) total = oracle::add(total, oracle::softmax(s.token_similarity));
        if (combo.use_occlusion) total = oracle::add(total, oracle::softmax(s.occlusion));
        for (int i = 0; i < n; ++i) CHECK(s.combined[i] == doctest::Approx(total[i]).epsilon(1e-12));
        CHECK(k == static_cast<int>(std::max_element(total.begin(), total.end()) - total.begin()));
        double sum = 0.0;
        for (double v : s.occlusion_normalized) sum += v;
        CHECK(sum == doctest::Approx(1.0));
    }
}

TEST_CASE("keyframe ties go to the lowest index")
{
    SelectionScores s;
    s.token_similarity = {0.2, 0.9, 0.9};
    s.occlusion = {1.0, 3.0, 3.0};
    CHECK(select_keyframe(s, ScoreCombo{}) == 1);
}

TEST_CASE("score combos parse and print")
{
    CHECK(ScoreCombo::parse("S2+S3").label() == "S2+S3");
    CHECK(ScoreCombo::parse("S3+S1").label() == "S1+S3");
    auto all = ScoreCombo::parse("S1+S2+S3");
    CHECK((all.use_clip && all.use_token_sim && all.use_occlusion));
    CHECK_THROWS_AS(ScoreCombo::parse("S4"), std::invalid_argument);
    SelectionScores s;
    s.occlusion = {1.0};
    CHECK_THROWS_AS(select_keyframe(s, ScoreCombo{false, false, false}), std::invalid_argument);
    CHECK_THROWS_AS(select_keyframe(s, ScoreCombo{}), std::invalid_argument);  // S2 missing
}

TEST_CASE("occlusion scores consult no memory and match decode")
{
    const auto m = testing_support::micro_model(3);
    Query q;
    auto v = testing_support::micro_video(3, &q, 4, 16);
    auto f = encode_all_frames(v.clip, m);
    auto tok = project_tokens(encode_tokens(f, q, m).raw, m);
    auto fused = aggregate(tok, {0.1});
    auto s = occlusion_scores(f, fused, m);
    REQUIRE(s.size() == 4);
    for (int i = 0; i < 4; ++i)
        CHECK(s[i] == decode(f.maps[i], f.fine[i], fused.vector, m).occlusion.item());
}

TEST_CASE("anchor frame maximizes query/frame cosine")
{
    const auto m = testing_support::micro_model(4);
    Query q;
    auto v = testing_support::micro_video(4, &q, 5, 16);
    auto f = encode_all_frames(v.clip, m);
    auto scores = clip_scores(f, q, m);
    const int a = anchor_frame(v.clip, q, m);
    for (double s : scores) CHECK(scores[a] >= s);
}

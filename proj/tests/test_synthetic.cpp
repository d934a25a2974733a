#include "ttvrs/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace ttvrs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("ttvrs_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("masks record exactly the visible pixels of the target")
{
    for (auto kind : {QueryKind::attribute, QueryKind::spatial_order, QueryKind::motion_rank}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            auto sq = random_scene(kind, seed, {});
            auto v = generate_video(sq.spec, sq.query);
            const int target = *sq.query.target;
            for (int t = 0; t < sq.spec.num_frames; ++t)
                for (int y = 0; y < sq.spec.height; ++y)
                    for (int x = 0; x < sq.spec.width; ++x) {
                        int top = -1;
                        for (int i = 0; i < static_cast<int>(sq.spec.objects.size()); ++i)
                            if (sq.spec.objects[i].covers(t, x, y)) top = i;
                        CHECK(v.masklet.at(t, y, x) == (top == target ? 1 : 0));
                        if (top >= 0) CHECK(v.clip.at(t, 0, y, x) == kPalette[sq.spec.objects[top].color_id][0]);
                    }
        }
    }
}

TEST_CASE("scenes are a pure function of the seed")
{
    auto a = random_scene(QueryKind::motion_rank, 42, {});
    auto b = random_scene(QueryKind::motion_rank, 42, {});
    auto va = generate_video(a.spec, a.query), vb = generate_video(b.spec, b.query);
    CHECK(va.clip.pixels == vb.clip.pixels);
    CHECK(va.masklet.masks == vb.masklet.masks);
}

TEST_CASE("absent queries produce empty masklets and a color not in the scene")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto sq = random_scene(QueryKind::absent, seed, {});
        CHECK_FALSE(sq.query.target.has_value());
        for (const auto& o : sq.spec.objects) CHECK(o.color_id != sq.query.color_id);
        auto v = generate_video(sq.spec, sq.query);
        CHECK(std::count(v.masklet.masks.begin(), v.masklet.masks.end(), 1) == 0);
    }
}

TEST_CASE("motion ranks follow measured centroid speed")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto sq = random_scene(QueryKind::motion_rank, seed, {});
        const int n = static_cast<int>(sq.spec.objects.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (sq.spec.objects[i].speed_rank < sq.spec.objects[j].speed_rank)
                    CHECK(mean_centroid_speed(sq.spec, i) > mean_centroid_speed(sq.spec, j));
    }
}

TEST_CASE("spatial queries pick the rank-th object from the left")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto sq = random_scene(QueryKind::spatial_order, seed, {});
        const int target = *sq.query.target;
        int left_of_target = 0;
        double tx = 0.0;
        for (int t = 0; t < sq.spec.num_frames; ++t) tx += (*object_centroid(sq.spec, target, t))[0];
        for (int i = 0; i < static_cast<int>(sq.spec.objects.size()); ++i) {
            if (i == target) continue;
            double x = 0.0;
            for (int t = 0; t < sq.spec.num_frames; ++t) x += (*object_centroid(sq.spec, i, t))[0];
            left_of_target += x < tx ? 1 : 0;
        }
        CHECK(left_of_target == sq.query.rank - 1);
    }
}

TEST_CASE("windowed targets are visible in one contiguous window")
{
    SceneOptions opts;
    opts.target_window = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto sq = random_scene(QueryKind::attribute, seed, opts);
        auto v = generate_video(sq.spec, sq.query);
        const auto& o = sq.spec.objects[*sq.query.target];
        CHECK(o.last_frame - o.first_frame + 1 < sq.spec.num_frames);
        for (int t = 0; t < sq.spec.num_frames; ++t)
            if (t < o.first_frame || t > o.last_frame) CHECK(v.masklet.frame_empty(t));
    }
}

TEST_CASE("invalid scenes and queries are rejected")
{
    auto sq = random_scene(QueryKind::attribute, 3, {});
    SUBCASE("oversized object")
    {
        sq.spec.objects[0].size = 40.0;
        CHECK_THROWS_AS(generate_video(sq.spec, sq.query), ValidationError);
    }
    SUBCASE("bad color")
    {
        sq.spec.objects[0].color_id = kNumColors;
        CHECK_THROWS_AS(generate_video(sq.spec, sq.query), ValidationError);
    }
    SUBCASE("ambiguous attribute")
    {
        for (auto& o : sq.spec.objects) o.color_id = sq.query.color_id;
        CHECK_THROWS_AS(validate_query(sq.spec, sq.query), ValidationError);
    }
    SUBCASE("empty visible range")
    {
        sq.spec.objects[0].first_frame = 5;
        sq.spec.objects[0].last_frame = 4;
        CHECK_THROWS_AS(sq.spec.validate(), ValidationError);
    }
}

TEST_CASE("exact_count rounds half away from zero")
{
    CHECK(exact_count(40, 0.1) == 4);
    CHECK(exact_count(10, 0.25) == 3);
    CHECK(exact_count(10, 0.0) == 0);
    CHECK(exact_count(7, 1.0) == 7);
}

TEST_CASE("make_dataset writes a loadable, deterministic manifest")
{
    DatasetConfig cfg;
    cfg.videos = 10;
    cfg.negatives = 0.2;
    cfg.test_videos = 3;
    cfg.frames = 4;
    cfg.width = cfg.height = 32;

    cfg.out_dir = scratch("ds_a");
    auto m = make_dataset(cfg);
    CHECK(m.split("train").size() == 10);
    CHECK(m.split("test").size() == 3);
    std::map<std::string, int> subsets;
    for (const auto* e : m.split("train")) ++subsets[e->query.subset()];
    CHECK(subsets["negative"] == 2);

    auto loaded = DatasetManifest::load(cfg.out_dir / "manifest.json");
    loaded.validate();
    REQUIRE(loaded.entries.size() == m.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto& e = loaded.entries[i];
        auto regenerated = generate_video(e.scene, e.query);
        CHECK(loaded.load_clip(e).pixels == regenerated.clip.pixels);
        CHECK(loaded.load_masklet(e).masks == regenerated.masklet.masks);
    }

    auto first = slurp(cfg.out_dir / "manifest.json");
    cfg.out_dir = scratch("ds_b");
    make_dataset(cfg);
    CHECK(slurp(cfg.out_dir / "manifest.json") == first);
}

TEST_CASE("make_dataset requires an existing parent directory")
{
    DatasetConfig cfg;
    cfg.videos = 1;
    cfg.out_dir = fs::temp_directory_path() / "ttvrs_no_such_parent" / "ds";
    fs::remove_all(fs::temp_directory_path() / "ttvrs_no_such_parent");
    CHECK_THROWS(make_dataset(cfg));
}

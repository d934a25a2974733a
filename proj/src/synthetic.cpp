#include "ttvrs/synthetic.hpp"

#include "ttvrs/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <set>

namespace ttvrs {

using json = nlohmann::json;

const std::array<std::array<std::uint8_t, 3>, kNumColors> kPalette{{
    {230, 40, 40},   // red
    {40, 200, 60},   // green
    {50, 80, 230},   // blue
    {230, 210, 40},  // yellow
    {40, 210, 210},  // cyan
    {210, 60, 210},  // magenta
}};

const std::array<const char*, kNumColors> kColorNames{"red", "green", "blue", "yellow", "cyan", "magenta"};

std::array<double, 2> ObjectSpec::center_at(int t) const
{
    if (trajectory.empty()) throw ValidationError("object without trajectory");
    if (t <= trajectory.front().frame) return {trajectory.front().x, trajectory.front().y};
    if (t >= trajectory.back().frame) return {trajectory.back().x, trajectory.back().y};
    auto hi = std::ranges::find_if(trajectory, [t](const Waypoint& w) { return w.frame >= t; });
    auto lo = std::prev(hi);
    const double u = static_cast<double>(t - lo->frame) / static_cast<double>(hi->frame - lo->frame);
    return {lo->x + u * (hi->x - lo->x), lo->y + u * (hi->y - lo->y)};
}

bool ObjectSpec::covers(int t, int px, int py) const
{
    if (!visible_at(t)) return false;
    const auto [cx, cy] = center_at(t);
    const double x = px + 0.5, y = py + 0.5;
    const double half = size / 2.0;
    switch (shape) {
    case ShapeKind::disk:
        return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= half * half;
    case ShapeKind::square:
        return std::abs(x - cx) <= half && std::abs(y - cy) <= half;
    case ShapeKind::triangle: {
        // Apex up, base of width `size` at the bottom.
        const double top = cy - half, bottom = cy + half;
        if (y < top || y > bottom) return false;
        return std::abs(x - cx) <= (y - top) / 2.0;
    }
    }
    return false;
}

void SceneSpec::validate() const
{
    if (width < 16 || height < 16) throw ValidationError("scene must be at least 16x16");
    if (num_frames < 1) throw ValidationError("scene needs at least one frame");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        const std::string tag = "object " + std::to_string(i) + ": ";
        if (o.color_id < 0 || o.color_id >= kNumColors) throw ValidationError(tag + "color id out of range");
        if (!(o.size > 0.0) || o.size >= std::min(width, height) / 2.0)
            throw ValidationError(tag + "size must be below min(H, W) / 2");
        if (o.first_frame < 0 || o.last_frame >= num_frames || o.first_frame > o.last_frame)
            throw ValidationError(tag + "visible range outside [0, T)");
        if (o.trajectory.empty()) throw ValidationError(tag + "empty trajectory");
        for (std::size_t k = 1; k < o.trajectory.size(); ++k)
            if (o.trajectory[k].frame <= o.trajectory[k - 1].frame)
                throw ValidationError(tag + "waypoint frames must increase");
    }
}

std::string to_string(QueryKind kind)
{
    switch (kind) {
    case QueryKind::attribute: return "attribute";
    case QueryKind::spatial_order: return "spatial-order";
    case QueryKind::motion_rank: return "motion-rank";
    case QueryKind::absent: return "absent";
    }
    return "?";
}

QueryKind query_kind_from_string(const std::string& s)
{
    if (s == "attribute") return QueryKind::attribute;
    if (s == "spatial-order") return QueryKind::spatial_order;
    if (s == "motion-rank") return QueryKind::motion_rank;
    if (s == "absent") return QueryKind::absent;
    throw ValidationError("unknown query kind '" + s + "'");
}

int Query::expression_code() const
{
    switch (kind) {
    case QueryKind::attribute:
    case QueryKind::absent: return color_id;
    case QueryKind::spatial_order: return kNumColors + rank - 1;
    case QueryKind::motion_rank: return kNumColors + kMaxRank + rank - 1;
    }
    return 0;
}

std::string Query::subset() const
{
    switch (kind) {
    case QueryKind::attribute: return "referring";
    case QueryKind::absent: return "negative";
    default: return "reasoning";
    }
}

namespace {

double mean_center_x(const ObjectSpec& o)
{
    double acc = 0.0;
    for (int t = o.first_frame; t <= o.last_frame; ++t) acc += o.center_at(t)[0];
    return acc / (o.last_frame - o.first_frame + 1);
}

double mean_center_speed(const ObjectSpec& o)
{
    if (o.last_frame == o.first_frame) return 0.0;
    double acc = 0.0;
    for (int t = o.first_frame + 1; t <= o.last_frame; ++t) {
        const auto a = o.center_at(t - 1), b = o.center_at(t);
        acc += std::hypot(b[0] - a[0], b[1] - a[1]);
    }
    return acc / (o.last_frame - o.first_frame);
}

} // namespace

void validate_query(const SceneSpec& spec, const Query& query)
{
    spec.validate();
    const int n = static_cast<int>(spec.objects.size());
    if (query.kind == QueryKind::absent) {
        if (query.target) throw ValidationError("absent query must not name a target");
        if (query.color_id < 0 || query.color_id >= kNumColors) throw ValidationError("absent query color out of range");
        for (const auto& o : spec.objects)
            if (o.color_id == query.color_id) throw ValidationError("absent query color is present in the scene");
        return;
    }
    if (!query.target) throw ValidationError(to_string(query.kind) + " query needs a target");
    const int target = *query.target;
    if (target < 0 || target >= n) throw ValidationError("query target out of range");

    switch (query.kind) {
    case QueryKind::attribute: {
        if (query.color_id < 0 || query.color_id >= kNumColors) throw ValidationError("query color out of range");
        const auto matches = std::ranges::count_if(spec.objects, [&](const ObjectSpec& o) { return o.color_id == query.color_id; });
        if (matches != 1 || spec.objects[target].color_id != query.color_id)
            throw ValidationError("attribute query must match exactly its target");
        break;
    }
    case QueryKind::spatial_order: {
        if (query.rank < 1 || query.rank > std::min(n, kMaxRank)) throw ValidationError("spatial rank out of range");
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> xs(n);
        for (int i = 0; i < n; ++i) xs[i] = mean_center_x(spec.objects[i]);
        std::ranges::sort(order, [&](int a, int b) { return xs[a] < xs[b]; });
        for (int i = 1; i < n; ++i)
            if (xs[order[i]] == xs[order[i - 1]]) throw ValidationError("spatial order is ambiguous");
        if (order[query.rank - 1] != target) throw ValidationError("spatial query does not select its target");
        break;
    }
    case QueryKind::motion_rank: {
        if (query.rank < 1 || query.rank > std::min(n, kMaxRank)) throw ValidationError("motion rank out of range");
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> speeds(n);
        for (int i = 0; i < n; ++i) speeds[i] = mean_center_speed(spec.objects[i]);
        std::ranges::sort(order, [&](int a, int b) { return speeds[a] > speeds[b]; });
        for (int i = 1; i < n; ++i)
            if (speeds[order[i]] == speeds[order[i - 1]]) throw ValidationError("speed ranking is ambiguous");
        for (int i = 0; i < n; ++i)
            if (spec.objects[order[i]].speed_rank != i + 1)
                throw ValidationError("speed ranks disagree with trajectories");
        if (order[query.rank - 1] != target) throw ValidationError("motion query does not select its target");
        break;
    }
    case QueryKind::absent: break;
    }
}

GeneratedVideo generate_video(const SceneSpec& spec, const Query& query)
{
    validate_query(spec, query);
    GeneratedVideo out{VideoClip(spec.num_frames, spec.height, spec.width),
                       Masklet(spec.num_frames, spec.height, spec.width)};
    const int target = query.target.value_or(-1);
    for (int t = 0; t < spec.num_frames; ++t)
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                int top = -1;
                for (int i = 0; i < static_cast<int>(spec.objects.size()); ++i)
                    if (spec.objects[i].covers(t, x, y)) top = i;
                if (top < 0) continue;
                const auto& rgb = kPalette[spec.objects[top].color_id];
                for (int c = 0; c < 3; ++c) out.clip.at(t, c, y, x) = rgb[c];
                if (top == target) out.masklet.at(t, y, x) = 1;
            }
    return out;
}

std::optional<std::array<double, 2>> object_centroid(const SceneSpec& spec, int object, int t)
{
    const auto& o = spec.objects.at(object);
    double sx = 0.0, sy = 0.0;
    long n = 0;
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            if (o.covers(t, x, y)) {
                sx += x + 0.5;
                sy += y + 0.5;
                ++n;
            }
    if (n == 0) return std::nullopt;
    return std::array<double, 2>{sx / n, sy / n};
}

double mean_centroid_speed(const SceneSpec& spec, int object)
{
    double acc = 0.0;
    int steps = 0;
    for (int t = 1; t < spec.num_frames; ++t) {
        auto a = object_centroid(spec, object, t - 1), b = object_centroid(spec, object, t);
        if (!a || !b) continue;
        acc += std::hypot((*b)[0] - (*a)[0], (*b)[1] - (*a)[1]);
        ++steps;
    }
    return steps ? acc / steps : 0.0;
}

namespace {

// Position after travelling `d` from `start` inside [lo, hi], bouncing off the ends.
double reflect(double start, double d, double lo, double hi)
{
    const double span = hi - lo;
    if (span <= 0.0) return lo;
    double u = std::fmod(start - lo + d, 2.0 * span);
    if (u < 0.0) u += 2.0 * span;
    return lo + (u <= span ? u : 2.0 * span - u);
}

std::vector<Waypoint> bouncing_path(Rng& rng, int frames, double x_lo, double x_hi, double y_lo, double y_hi,
                                    double vx, double vy)
{
    const double x0 = rng.uniform(x_lo, x_hi), y0 = rng.uniform(y_lo, y_hi);
    std::vector<Waypoint> path;
    for (int t = 0; t < frames; ++t)
        path.push_back({t, reflect(x0, vx * t, x_lo, x_hi), reflect(y0, vy * t, y_lo, y_hi)});
    return path;
}

} // namespace

SceneAndQuery random_scene(QueryKind kind, std::uint64_t seed, const SceneOptions& options)
{
    Rng rng(seed);
    SceneAndQuery out;
    SceneSpec& spec = out.spec;
    spec.width = options.width;
    spec.height = options.height;
    spec.num_frames = options.num_frames;
    spec.seed = seed;
    const int frames = options.num_frames;

    const int n = kind == QueryKind::absent ? rng.integer(1, 3) : rng.integer(2, 3);
    std::array<int, kNumColors> colors{};
    std::iota(colors.begin(), colors.end(), 0);
    rng.shuffle(std::span<int>(colors));

    std::array<double, 3> speed_levels{0.4, 1.5, 3.0};
    rng.shuffle(std::span<double>(speed_levels));

    const double max_size = std::min(options.width, options.height) / 2.0 - 1.0;
    const double lane = static_cast<double>(options.width) / n;

    for (int i = 0; i < n; ++i) {
        ObjectSpec o;
        o.shape = static_cast<ShapeKind>(rng.integer(0, 2));
        o.color_id = colors[i];
        o.size = std::min(rng.uniform(10.0, 16.0), max_size);
        o.first_frame = 0;
        o.last_frame = frames - 1;
        const double speed = kind == QueryKind::motion_rank ? speed_levels[i] : rng.uniform(0.3, 2.5);
        const double half = o.size / 2.0 + 1.0;
        if (kind == QueryKind::spatial_order) {
            // Object i lives in lane i, so left-to-right order is fixed.
            o.size = std::min(o.size, lane - 4.0);
            const double h = o.size / 2.0 + 1.0;
            const double lo = lane * i + h, hi = lane * (i + 1) - h;
            const double vx = rng.uniform(-0.3, 0.3) * speed;
            const double vy = (rng.uniform() < 0.5 ? -1.0 : 1.0) * speed;
            o.trajectory = bouncing_path(rng, frames, lo, std::max(lo, hi), h, options.height - h, vx, vy);
        } else {
            const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            o.trajectory = bouncing_path(rng, frames, half, options.width - half, half, options.height - half,
                                         speed * std::cos(theta), speed * std::sin(theta));
        }
        spec.objects.push_back(std::move(o));
    }

    std::vector<int> by_speed(n);
    std::iota(by_speed.begin(), by_speed.end(), 0);
    std::vector<double> speeds(n);
    for (int i = 0; i < n; ++i) speeds[i] = mean_center_speed(spec.objects[i]);
    std::ranges::sort(by_speed, [&](int a, int b) { return speeds[a] > speeds[b]; });
    for (int r = 0; r < n; ++r) spec.objects[by_speed[r]].speed_rank = r + 1;

    Query& q = out.query;
    q.kind = kind;
    // Lane / speed order is decided before draw order is shuffled.
    int target = rng.integer(0, n - 1);
    switch (kind) {
    case QueryKind::attribute:
        q.color_id = spec.objects[target].color_id;
        break;
    case QueryKind::absent:
        q.color_id = colors[n];
        target = -1;
        break;
    case QueryKind::spatial_order:
        q.rank = target + 1;
        break;
    case QueryKind::motion_rank:
        q.rank = spec.objects[target].speed_rank;
        break;
    }
    if (target >= 0 && options.target_window && kind == QueryKind::attribute) {
        const int len = rng.integer(std::max(1, frames / 4), std::max(1, frames / 2));
        const int start = rng.integer(0, frames - len);
        spec.objects[target].first_frame = start;
        spec.objects[target].last_frame = start + len - 1;
    }

    std::vector<int> draw(n);
    std::iota(draw.begin(), draw.end(), 0);
    rng.shuffle(std::span<int>(draw));
    std::vector<ObjectSpec> ordered;
    for (int i : draw) ordered.push_back(spec.objects[i]);
    spec.objects = std::move(ordered);
    if (target >= 0) q.target = static_cast<int>(std::ranges::find(draw, target) - draw.begin());

    validate_query(spec, q);
    return out;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

const char* shape_name(ShapeKind s)
{
    switch (s) {
    case ShapeKind::disk: return "disk";
    case ShapeKind::square: return "square";
    case ShapeKind::triangle: return "triangle";
    }
    return "?";
}

ShapeKind shape_from(const std::string& s)
{
    if (s == "disk") return ShapeKind::disk;
    if (s == "square") return ShapeKind::square;
    if (s == "triangle") return ShapeKind::triangle;
    throw ValidationError("unknown shape '" + s + "'");
}

json query_json(const Query& q)
{
    json j{{"kind", to_string(q.kind)}, {"color_id", q.color_id}, {"rank", q.rank}};
    j["target"] = q.target ? json(*q.target) : json(nullptr);
    return j;
}

Query query_from(const json& j)
{
    Query q;
    q.kind = query_kind_from_string(j.at("kind").get<std::string>());
    q.color_id = j.at("color_id").get<int>();
    q.rank = j.at("rank").get<int>();
    if (!j.at("target").is_null()) q.target = j.at("target").get<int>();
    return q;
}

json scene_json(const SceneSpec& s)
{
    json objects = json::array();
    for (const auto& o : s.objects) {
        json path = json::array();
        for (const auto& w : o.trajectory) path.push_back({w.frame, w.x, w.y});
        objects.push_back({{"shape", shape_name(o.shape)},
                           {"color_id", o.color_id},
                           {"size", o.size},
                           {"speed_rank", o.speed_rank},
                           {"visible", {o.first_frame, o.last_frame}},
                           {"trajectory", path}});
    }
    return {{"width", s.width}, {"height", s.height}, {"num_frames", s.num_frames},
            {"seed", s.seed}, {"objects", objects}};
}

SceneSpec scene_from(const json& j)
{
    SceneSpec s;
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.num_frames = j.at("num_frames").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jo : j.at("objects")) {
        ObjectSpec o;
        o.shape = shape_from(jo.at("shape").get<std::string>());
        o.color_id = jo.at("color_id").get<int>();
        o.size = jo.at("size").get<double>();
        o.speed_rank = jo.at("speed_rank").get<int>();
        o.first_frame = jo.at("visible").at(0).get<int>();
        o.last_frame = jo.at("visible").at(1).get<int>();
        for (const auto& w : jo.at("trajectory"))
            o.trajectory.push_back({w.at(0).get<int>(), w.at(1).get<double>(), w.at(2).get<double>()});
        s.objects.push_back(std::move(o));
    }
    return s;
}

} // namespace

std::vector<const ManifestEntry*> DatasetManifest::split(const std::string& name) const
{
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
        if (e.split == name) out.push_back(&e);
    return out;
}

VideoClip DatasetManifest::load_clip(const ManifestEntry& e) const
{
    return ttvrs::load_clip(root / e.video_path, e.scene.num_frames);
}

Masklet DatasetManifest::load_masklet(const ManifestEntry& e) const
{
    return ttvrs::load_masklet(root / e.masklet_path, e.scene.num_frames);
}

void DatasetManifest::save(const std::filesystem::path& file) const
{
    json entries_json = json::array();
    for (const auto& e : entries)
        entries_json.push_back({{"id", e.id},
                                {"video_path", e.video_path},
                                {"masklet_path", e.masklet_path},
                                {"query", query_json(e.query)},
                                {"split", e.split},
                                {"scene", scene_json(e.scene)}});
    json j{{"format_version", format_version},
           {"width", width},
           {"height", height},
           {"num_frames", num_frames},
           {"entries", entries_json}};
    std::ofstream f(file);
    if (!f) throw IoError("cannot write " + file.string());
    f << j.dump(1) << "\n";
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& file)
{
    std::ifstream f(file);
    if (!f) throw IoError("cannot open manifest " + file.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw IoError("malformed manifest " + file.string() + ": " + e.what());
    }
    DatasetManifest m;
    m.root = file.parent_path();
    try {
        m.format_version = j.at("format_version").get<std::string>();
        if (m.format_version != "1") throw IoError("unsupported manifest version " + m.format_version);
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
        m.num_frames = j.at("num_frames").get<int>();
        for (const auto& je : j.at("entries")) {
            ManifestEntry e;
            e.id = je.at("id").get<std::string>();
            e.video_path = je.at("video_path").get<std::string>();
            e.masklet_path = je.at("masklet_path").get<std::string>();
            e.query = query_from(je.at("query"));
            e.split = je.at("split").get<std::string>();
            e.scene = scene_from(je.at("scene"));
            m.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw IoError("malformed manifest " + file.string() + ": " + e.what());
    }
    return m;
}

void DatasetManifest::validate() const
{
    std::set<std::string> ids;
    for (const auto& e : entries) {
        if (!ids.insert(e.id).second) throw ValidationError("duplicate entry id " + e.id);
        if (e.split != "train" && e.split != "test") throw ValidationError("entry " + e.id + " has unknown split");
        for (const auto& p : {e.video_path, e.masklet_path})
            if (!std::filesystem::is_directory(root / p)) throw IoError("unresolvable path " + (root / p).string());
    }
}

int exact_count(int count, double fraction)
{
    return static_cast<int>(std::llround(static_cast<double>(count) * fraction));
}

namespace {

std::vector<QueryKind> kind_plan(int total, double negatives, const DatasetConfig& cfg, Rng& rng)
{
    const int n_neg = exact_count(total, negatives);
    const int n_pos = total - n_neg;
    const std::array<QueryKind, 3> kinds{QueryKind::attribute, QueryKind::spatial_order, QueryKind::motion_rank};
    std::array<double, 3> w{cfg.attribute_weight, cfg.spatial_weight, cfg.motion_weight};
    const double wsum = w[0] + w[1] + w[2];
    if (!(wsum > 0.0)) throw ValidationError("query-kind weights must not all be zero");
    // Largest-remainder apportionment of positives across kinds.
    std::array<int, 3> count{};
    std::array<double, 3> rem{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double quota = n_pos * w[i] / wsum;
        count[i] = static_cast<int>(std::floor(quota));
        rem[i] = quota - count[i];
        assigned += count[i];
    }
    while (assigned < n_pos) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[i] > rem[best]) best = i;
        ++count[best];
        rem[best] = -1.0;
        ++assigned;
    }
    std::vector<QueryKind> plan(static_cast<std::size_t>(n_neg), QueryKind::absent);
    for (int i = 0; i < 3; ++i) plan.insert(plan.end(), static_cast<std::size_t>(count[i]), kinds[i]);
    rng.shuffle(std::span<QueryKind>(plan));
    return plan;
}

} // namespace

DatasetManifest make_dataset(const DatasetConfig& cfg)
{
    if (cfg.videos < 0 || cfg.test_videos < 0) throw ValidationError("video counts must be non-negative");
    for (double f : {cfg.negatives, cfg.test_negatives, cfg.window_fraction})
        if (f < 0.0 || f > 1.0) throw ValidationError("fractions must lie in [0, 1]");
    if (cfg.attribute_weight < 0 || cfg.spatial_weight < 0 || cfg.motion_weight < 0)
        throw ValidationError("query-kind weights must be non-negative");

    const auto parent = cfg.out_dir.parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent))
        throw IoError("parent directory of " + cfg.out_dir.string() + " does not exist");
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir / "videos", ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out_dir.string() + ": " + ec.message());

    DatasetManifest manifest;
    manifest.width = cfg.width;
    manifest.height = cfg.height;
    manifest.num_frames = cfg.frames;
    manifest.root = cfg.out_dir;

    struct Job {
        std::string id;
        std::string split;
        QueryKind kind;
        bool window;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    Rng plan_rng(cfg.seed);
    for (const auto& [split, total, neg] : {std::tuple{std::string("train"), cfg.videos, cfg.negatives},
                                            std::tuple{std::string("test"), cfg.test_videos, cfg.test_negatives}}) {
        const auto plan = kind_plan(total, neg, cfg, plan_rng);
        const int n_attr = static_cast<int>(std::ranges::count(plan, QueryKind::attribute));
        int windows_left = exact_count(n_attr, cfg.window_fraction);
        for (int i = 0; i < total; ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "%s_%04d", split.c_str(), i);
            const bool window = plan[i] == QueryKind::attribute && windows_left > 0;
            if (window) --windows_left;
            const std::uint64_t tag = split == "train" ? 0x7472ULL : 0x7465ULL;
            jobs.push_back({id, split, plan[i], window, splitmix64(cfg.seed ^ (tag << 48)) + static_cast<std::uint64_t>(i)});
        }
    }

    manifest.entries.resize(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    const SceneOptions opts{cfg.width, cfg.height, cfg.frames, false};
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            const Job& job = jobs[i];
            SceneOptions o = opts;
            o.target_window = job.window;
            auto [spec, query] = random_scene(job.kind, job.seed, o);
            auto video = generate_video(spec, query);
            const std::string base = "videos/" + job.id;
            save_clip(cfg.out_dir / base / "frames", video.clip);
            save_masklet(cfg.out_dir / base / "masks", video.masklet);
            manifest.entries[i] = ManifestEntry{job.id, base + "/frames", base + "/masks", query, job.split, spec};
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    manifest.save(cfg.out_dir / "manifest.json");
    return manifest;
}

} // namespace ttvrs

#pragma once

// Procedural moving-shape videos with structured queries and exact masks.

#include "ttvrs/video.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttvrs {

/// A query or scene that contradicts itself.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class ShapeKind { disk, square, triangle };

inline constexpr int kNumColors = 6;
/// Largest rank a spatial-order or motion-rank query may ask for.
inline constexpr int kMaxRank = 3;
extern const std::array<std::array<std::uint8_t, 3>, kNumColors> kPalette;
extern const std::array<const char*, kNumColors> kColorNames;

struct Waypoint {
    int frame = 0;
    double x = 0.0;
    double y = 0.0;
};

struct ObjectSpec {
    ShapeKind shape = ShapeKind::disk;
    int color_id = 0;
    /// Diameter of a disk, side of a square, base and height of a triangle.
    double size = 12.0;
    std::vector<Waypoint> trajectory;
    /// 1 is the fastest object of the scene.
    int speed_rank = 1;
    int first_frame = 0;
    int last_frame = 0;

    bool visible_at(int t) const { return t >= first_frame && t <= last_frame; }
    /// Piecewise-linear center, clamped outside the waypoint range.
    std::array<double, 2> center_at(int t) const;
    /// Hard-edged coverage test of the pixel whose center is (px + .5, py + .5).
    bool covers(int t, int px, int py) const;
};

struct SceneSpec {
    int width = 64;
    int height = 64;
    int num_frames = 16;
    std::vector<ObjectSpec> objects;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class QueryKind { attribute, spatial_order, motion_rank, absent };

std::string to_string(QueryKind kind);
QueryKind query_kind_from_string(const std::string& s);

/// Structured stand-in for a referring or reasoning expression.
///
/// attribute: "the <color> object"; spatial_order: "the rank-th object from
/// the left"; motion_rank: "the rank-th fastest object"; absent: an
/// attribute expression whose color is not in the scene.
struct Query {
    QueryKind kind = QueryKind::attribute;
    int color_id = -1;
    int rank = 0;
    std::optional<int> target;

    bool is_negative() const { return kind == QueryKind::absent; }
    /// Expression code the encoder embeds. An absent query reads exactly
    /// like the attribute query for its color.
    int expression_code() const;
    /// "referring" for explicit attribute expressions, "reasoning" for
    /// spatial and motion ones, "negative" for absent targets.
    std::string subset() const;
};

inline constexpr int kNumExpressionCodes = kNumColors + 2 * kMaxRank;

/// Throws ValidationError unless `query` picks out exactly its target in `spec`.
void validate_query(const SceneSpec& spec, const Query& query);

struct GeneratedVideo {
    VideoClip clip;
    Masklet masklet;
};

/// Renders the scene (later objects on top) and the visible pixels of the
/// query's target. Negative queries yield an all-zero masklet.
GeneratedVideo generate_video(const SceneSpec& spec, const Query& query);

/// Rasterized centroid of an object drawn alone, or nullopt when not visible.
std::optional<std::array<double, 2>> object_centroid(const SceneSpec& spec, int object, int t);
/// Mean frame-to-frame centroid displacement over consecutive visible frames.
double mean_centroid_speed(const SceneSpec& spec, int object);

struct SceneOptions {
    int width = 64;
    int height = 64;
    int num_frames = 16;
    /// The target is visible only in a contiguous window (attribute queries).
    bool target_window = false;
};

struct SceneAndQuery {
    SceneSpec spec;
    Query query;
};

/// Random scene with a consistent query of the given kind; a pure function of `seed`.
SceneAndQuery random_scene(QueryKind kind, std::uint64_t seed, const SceneOptions& options);

struct DatasetConfig {
    std::filesystem::path out_dir;
    int videos = 40;
    double negatives = 0.0;
    int test_videos = 0;
    double test_negatives = 0.0;
    std::uint64_t seed = 7;
    int width = 64;
    int height = 64;
    int frames = 16;
    /// Relative weights of positive query kinds.
    double attribute_weight = 0.8;
    double spatial_weight = 0.1;
    double motion_weight = 0.1;
    /// Fraction of positive attribute videos whose target appears only in a window.
    double window_fraction = 0.25;
};

struct ManifestEntry {
    std::string id;
    std::string video_path;
    std::string masklet_path;
    Query query;
    std::string split;
    SceneSpec scene;
};

struct DatasetManifest {
    std::string format_version = "1";
    int width = 0;
    int height = 0;
    int num_frames = 0;
    std::vector<ManifestEntry> entries;
    /// Directory the relative paths resolve against.
    std::filesystem::path root;

    std::vector<const ManifestEntry*> split(const std::string& name) const;
    VideoClip load_clip(const ManifestEntry& e) const;
    Masklet load_masklet(const ManifestEntry& e) const;

    void save(const std::filesystem::path& file) const;
    static DatasetManifest load(const std::filesystem::path& file);
    /// Checks that every path resolves and every entry has a known split.
    void validate() const;
};

/// Number of entries a fraction selects: round-half-away of count * fraction.
int exact_count(int count, double fraction);

/// Writes videos, masklets and manifest.json under config.out_dir.
DatasetManifest make_dataset(const DatasetConfig& config);

} // namespace ttvrs

#include "ttvrs/metrics.hpp"

#include "ttvrs/kernels.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ttvrs {

namespace {

void check_dims(const Masklet& a, const Masklet& b, const char* what)
{
    if (!a.same_dims(b))
        throw ShapeError(std::string(what) + ": masklets differ in dimensions");
}

std::uint8_t blend(std::uint8_t base, double color, double opacity)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp((1.0 - opacity) * base + opacity * color, 0.0, 255.0)));
}

} // namespace

double frame_iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt)
{
    if (pred.size() != gt.size()) throw ShapeError("frame_iou: size mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += (pred[i] && gt[i]) ? 1 : 0;
        uni += (pred[i] || gt[i]) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double frame_contour_f(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, int height, int width,
                       int tolerance)
{
    if (tolerance < 0) throw std::invalid_argument("contour tolerance must be non-negative");
    const std::size_t n = static_cast<std::size_t>(height) * width;
    if (pred.size() != n || gt.size() != n) throw ShapeError("frame_contour_f: size mismatch");
    std::vector<std::uint8_t> bp(n), bg(n), dp(n), dg(n);
    kernels::omp::boundary_map(pred, bp, height, width);
    kernels::omp::boundary_map(gt, bg, height, width);
    const auto np = std::count(bp.begin(), bp.end(), 1), ng = std::count(bg.begin(), bg.end(), 1);
    if (np == 0 && ng == 0) return 1.0;
    if (np == 0 || ng == 0) return 0.0;
    kernels::omp::dilate_chebyshev(bp, dp, height, width, tolerance);
    kernels::omp::dilate_chebyshev(bg, dg, height, width, tolerance);
    std::size_t hit_p = 0, hit_g = 0;
    for (std::size_t i = 0; i < n; ++i) {
        hit_p += (bp[i] && dg[i]) ? 1 : 0;
        hit_g += (bg[i] && dp[i]) ? 1 : 0;
    }
    const double precision = static_cast<double>(hit_p) / static_cast<double>(np);
    const double recall = static_cast<double>(hit_g) / static_cast<double>(ng);
    return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

double region_similarity(const Masklet& pred, const Masklet& gt)
{
    check_dims(pred, gt, "region_similarity");
    if (gt.num_frames == 0) throw std::invalid_argument("region_similarity: no frames");
    double acc = 0.0;
    for (int t = 0; t < gt.num_frames; ++t) acc += frame_iou(pred.frame(t), gt.frame(t));
    return acc / gt.num_frames;
}

double contour_accuracy(const Masklet& pred, const Masklet& gt, int tolerance)
{
    check_dims(pred, gt, "contour_accuracy");
    if (gt.num_frames == 0) throw std::invalid_argument("contour_accuracy: no frames");
    double acc = 0.0;
    for (int t = 0; t < gt.num_frames; ++t)
        acc += frame_contour_f(pred.frame(t), gt.frame(t), gt.height, gt.width, tolerance);
    return acc / gt.num_frames;
}

double foreground_fraction(const Masklet& pred)
{
    if (pred.masks.empty()) return 0.0;
    const auto on = std::count(pred.masks.begin(), pred.masks.end(), 1);
    return static_cast<double>(on) / static_cast<double>(pred.masks.size());
}

VideoMetrics evaluate_video(const std::string& id, const std::string& subset, const Masklet& pred,
                            const Masklet& gt, bool negative, int tolerance, double epsilon)
{
    VideoMetrics m;
    m.video = id;
    m.subset = subset;
    m.J = region_similarity(pred, gt);
    m.F = contour_accuracy(pred, gt, tolerance);
    m.JF = (m.J + m.F) / 2.0;
    m.negative = negative;
    m.hallucinated = negative && foreground_fraction(pred) > epsilon;
    return m;
}

std::optional<double> robustness(const std::vector<VideoMetrics>& videos)
{
    int negatives = 0, clean = 0;
    for (const auto& v : videos)
        if (v.negative) {
            ++negatives;
            clean += v.hallucinated ? 0 : 1;
        }
    if (negatives == 0) return std::nullopt;
    return static_cast<double>(clean) / negatives;
}

MetricsReport MetricsReport::build(std::vector<VideoMetrics> videos)
{
    MetricsReport r;
    r.videos = std::move(videos);
    auto add = [](SubsetMeans& s, const VideoMetrics& v) {
        ++s.count;
        s.J += v.J;
        s.F += v.F;
        s.JF += v.JF;
    };
    for (const auto& v : r.videos) {
        if (v.negative) continue;
        add(r.positive, v);
        if (v.subset == "referring") add(r.referring, v);
        if (v.subset == "reasoning") add(r.reasoning, v);
    }
    for (auto* s : {&r.positive, &r.referring, &r.reasoning})
        if (s->count > 0) {
            s->J /= s->count;
            s->F /= s->count;
            s->JF /= s->count;
        }
    r.R = robustness(r.videos);
    return r;
}

std::string MetricsReport::to_json() const
{
    using nlohmann::json;
    json doc;
    doc["videos"] = json::array();
    for (const auto& v : videos)
        doc["videos"].push_back({{"video", v.video},
                                 {"subset", v.subset},
                                 {"J", v.J},
                                 {"F", v.F},
                                 {"JF", v.JF},
                                 {"negative", v.negative},
                                 {"hallucinated", v.hallucinated}});
    auto means = [](const SubsetMeans& s) {
        return json{{"count", s.count}, {"J", s.J}, {"F", s.F}, {"JF", s.JF}};
    };
    doc["aggregate"] = {{"positive", means(positive)}, {"referring", means(referring)}, {"reasoning", means(reasoning)}};
    doc["aggregate"]["R_local_definition"] = R ? json(*R) : json(nullptr);
    return doc.dump(2) + "\n";
}

std::string MetricsReport::to_csv() const
{
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "video,J,F,JF,negative,hallucinated\n";
    for (const auto& v : videos)
        out << v.video << ',' << v.J << ',' << v.F << ',' << v.JF << ',' << (v.negative ? 1 : 0) << ','
            << (v.hallucinated ? 1 : 0) << '\n';
    auto row = [&](const char* label, const SubsetMeans& s) {
        out << label << ',' << s.J << ',' << s.F << ',' << s.JF << ",,\n";
    };
    row("mean (positive)", positive);
    row("mean (referring)", referring);
    row("mean (reasoning)", reasoning);
    out << "R (local definition),";
    if (R) out << *R;
    else out << "n/a";
    out << ",,,,\n";
    return out.str();
}

void MetricsReport::write(const std::filesystem::path& json_file, const std::filesystem::path& csv_file) const
{
    std::ofstream j(json_file), c(csv_file);
    if (!j || !c) throw IoError("cannot write metrics report");
    j << to_json();
    c << to_csv();
}

std::vector<double> pca_projection(const Tensor& embeddings)
{
    if (embeddings.rank() != 3) throw ShapeError("pca_projection: expected C x h x w, got " + shape_str(embeddings.shape()));
    if (!embeddings.all_finite()) throw std::domain_error("pca_projection: non-finite embeddings");
    const int c = embeddings.dim(0), n = embeddings.dim(1) * embeddings.dim(2);
    Eigen::MatrixXd x(n, c);
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < n; ++i) x(i, ch) = embeddings[static_cast<std::size_t>(ch) * n + i];
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(std::max(n - 1, 1));

    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    if (cov.norm() == 0.0) return out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    Eigen::VectorXd v = solver.eigenvectors().col(c - 1);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0) v = -v;
    const Eigen::VectorXd proj = x * v;
    const double lo = proj.minCoeff(), hi = proj.maxCoeff();
    if (!(hi - lo > 1e-12)) return out;
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = (proj(i) - lo) / (hi - lo);
    return out;
}

RgbImage pca_visualize(const Tensor& embeddings, const RgbImage& frame, double opacity)
{
    const auto values = pca_projection(embeddings);
    const int h = embeddings.dim(1), w = embeddings.dim(2);
    if (frame.height % h != 0 || frame.width % w != 0 || frame.height / h != frame.width / w)
        throw ShapeError("pca_visualize: frame is not an integer upsampling of the embedding grid");
    const int s = frame.height / h;
    std::vector<double> up(static_cast<std::size_t>(frame.height) * frame.width);
    kernels::omp::upsample_nearest(values, up, 1, h, w, s);
    RgbImage out = frame;
    for (std::size_t i = 0; i < up.size(); ++i) {
        out.rgb[3 * i + 0] = blend(frame.rgb[3 * i + 0], 255.0 * up[i], opacity);
        out.rgb[3 * i + 1] = blend(frame.rgb[3 * i + 1], 0.0, opacity);
        out.rgb[3 * i + 2] = blend(frame.rgb[3 * i + 2], 255.0 * (1.0 - up[i]), opacity);
    }
    return out;
}

RgbImage mask_overlay(std::span<const std::uint8_t> mask, const RgbImage& frame, double opacity)
{
    if (mask.size() != static_cast<std::size_t>(frame.height) * frame.width)
        throw ShapeError("mask_overlay: mask does not match the frame");
    RgbImage out = frame;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        out.rgb[3 * i + 0] = blend(frame.rgb[3 * i + 0], 255.0, opacity);
        out.rgb[3 * i + 1] = blend(frame.rgb[3 * i + 1], 255.0, opacity);
        out.rgb[3 * i + 2] = blend(frame.rgb[3 * i + 2], 0.0, opacity);
    }
    return out;
}

} // namespace ttvrs

#pragma once

// Region similarity J, contour accuracy F, the robustness rate R, report
// tables, and the PCA mask-embedding overlay.

#include "ttvrs/tensor.hpp"
#include "ttvrs/video.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ttvrs {

/// IoU of one frame; 1 when both masks are empty.
double frame_iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

/// Boundary F-measure of one frame with a Chebyshev tolerance in pixels.
double frame_contour_f(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, int height, int width,
                       int tolerance);

double region_similarity(const Masklet& pred, const Masklet& gt);
double contour_accuracy(const Masklet& pred, const Masklet& gt, int tolerance = 1);

/// Mean predicted foreground fraction over all frames.
double foreground_fraction(const Masklet& pred);

inline constexpr double kDefaultHallucinationEpsilon = 0.001;

struct VideoMetrics {
    std::string video;
    std::string subset;  // referring, reasoning or negative
    double J = 0.0;
    double F = 0.0;
    double JF = 0.0;
    bool negative = false;
    bool hallucinated = false;
};

VideoMetrics evaluate_video(const std::string& id, const std::string& subset, const Masklet& pred,
                            const Masklet& gt, bool negative, int tolerance = 1,
                            double epsilon = kDefaultHallucinationEpsilon);

/// Fraction of negative videos that were not hallucinated; empty when there
/// are no negatives.
std::optional<double> robustness(const std::vector<VideoMetrics>& videos);

struct SubsetMeans {
    int count = 0;
    double J = 0.0;
    double F = 0.0;
    double JF = 0.0;
};

struct MetricsReport {
    std::vector<VideoMetrics> videos;
    SubsetMeans positive;
    SubsetMeans referring;
    SubsetMeans reasoning;
    std::optional<double> R;

    static MetricsReport build(std::vector<VideoMetrics> videos);
    std::string to_json() const;
    std::string to_csv() const;
    void write(const std::filesystem::path& json_file, const std::filesystem::path& csv_file) const;
};

/// First principal component over channels of a C x h x w field, per
/// location, min-max normalized to [0, 1]. Zero variance gives all zeros.
std::vector<double> pca_projection(const Tensor& embeddings);

/// Upsamples the PCA projection to the frame and blends a heat colour over it.
RgbImage pca_visualize(const Tensor& embeddings, const RgbImage& frame, double opacity = 0.5);

/// Tints predicted pixels of `frame`.
RgbImage mask_overlay(std::span<const std::uint8_t> mask, const RgbImage& frame, double opacity = 0.5);

} // namespace ttvrs

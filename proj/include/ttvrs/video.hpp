#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace ttvrs {

/// Raised for malformed or unreadable image files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// T x 3 x H x W frames, planar RGB per frame.
struct VideoClip {
    int num_frames = 0;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;

    VideoClip() = default;
    VideoClip(int t, int h, int w)
        : num_frames(t), height(h), width(w), pixels(static_cast<std::size_t>(t) * 3 * h * w, 0) {}

    std::size_t frame_size() const { return static_cast<std::size_t>(3) * height * width; }
    std::span<std::uint8_t> frame(int t) { return {pixels.data() + t * frame_size(), frame_size()}; }
    std::span<const std::uint8_t> frame(int t) const { return {pixels.data() + t * frame_size(), frame_size()}; }
    std::uint8_t& at(int t, int c, int y, int x)
    {
        return pixels[t * frame_size() + (static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::uint8_t at(int t, int c, int y, int x) const
    {
        return pixels[t * frame_size() + (static_cast<std::size_t>(c) * height + y) * width + x];
    }
    /// Frames at `indices`, in that order.
    VideoClip subset(std::span<const int> indices) const;
};

/// T x H x W binary masks, one byte per pixel holding 0 or 1.
struct Masklet {
    int num_frames = 0;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> masks;

    Masklet() = default;
    Masklet(int t, int h, int w)
        : num_frames(t), height(h), width(w), masks(static_cast<std::size_t>(t) * h * w, 0) {}

    std::size_t frame_size() const { return static_cast<std::size_t>(height) * width; }
    std::span<std::uint8_t> frame(int t) { return {masks.data() + t * frame_size(), frame_size()}; }
    std::span<const std::uint8_t> frame(int t) const { return {masks.data() + t * frame_size(), frame_size()}; }
    std::uint8_t& at(int t, int y, int x) { return masks[t * frame_size() + static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int t, int y, int x) const
    {
        return masks[t * frame_size() + static_cast<std::size_t>(y) * width + x];
    }
    std::size_t count(int t) const;
    bool frame_empty(int t) const { return count(t) == 0; }
    bool same_dims(const Masklet& o) const
    {
        return num_frames == o.num_frames && height == o.height && width == o.width;
    }
    Masklet subset(std::span<const int> indices) const;
};

/// Interleaved 8-bit RGB image, the in-memory form of a P6 file.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> rgb;
};

void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);
/// Writes a binary mask as P5 with values {0, 255}.
void write_pgm_mask(const std::filesystem::path& path, std::span<const std::uint8_t> mask, int height, int width);
/// Reads a P5 file; any nonzero value becomes 1.
std::vector<std::uint8_t> read_pgm_mask(const std::filesystem::path& path, int& height, int& width);

RgbImage frame_image(const VideoClip& clip, int t);

std::string frame_file_name(int index);
std::string mask_file_name(int index);

void save_clip(const std::filesystem::path& dir, const VideoClip& clip);
VideoClip load_clip(const std::filesystem::path& dir, int num_frames);
void save_masklet(const std::filesystem::path& dir, const Masklet& masklet);
Masklet load_masklet(const std::filesystem::path& dir, int num_frames);

} // namespace ttvrs

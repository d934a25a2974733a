#include "ttvrs/video.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace ttvrs {

VideoClip VideoClip::subset(std::span<const int> indices) const
{
    VideoClip out(static_cast<int>(indices.size()), height, width);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= num_frames)
            throw std::out_of_range("frame index " + std::to_string(indices[i]));
        std::ranges::copy(frame(indices[i]), out.frame(static_cast<int>(i)).begin());
    }
    return out;
}

std::size_t Masklet::count(int t) const
{
    auto f = frame(t);
    return static_cast<std::size_t>(std::count_if(f.begin(), f.end(), [](std::uint8_t v) { return v != 0; }));
}

Masklet Masklet::subset(std::span<const int> indices) const
{
    Masklet out(static_cast<int>(indices.size()), height, width);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= num_frames)
            throw std::out_of_range("frame index " + std::to_string(indices[i]));
        std::ranges::copy(frame(indices[i]), out.frame(static_cast<int>(i)).begin());
    }
    return out;
}

namespace {

void write_netpbm(const std::filesystem::path& path, const char* magic, int height, int width,
                  std::span<const std::uint8_t> payload)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << magic << "\n" << width << " " << height << "\n255\n";
    f.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!f) throw IoError("short write to " + path.string());
}

// Reads the header token stream of a P5/P6 file, skipping '#' comments.
int read_header_int(std::istream& in, const std::filesystem::path& path)
{
    int c = in.peek();
    while (c != EOF) {
        if (std::isspace(c)) {
            in.get();
        } else if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            break;
        }
        c = in.peek();
    }
    int v = 0;
    if (!(in >> v)) throw IoError("bad netpbm header in " + path.string());
    return v;
}

std::vector<std::uint8_t> read_netpbm(const std::filesystem::path& path, const std::string& magic, int channels,
                                      int& height, int& width)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::string m;
    f >> m;
    if (m != magic) throw IoError(path.string() + ": expected " + magic + ", found '" + m + "'");
    width = read_header_int(f, path);
    height = read_header_int(f, path);
    const int maxval = read_header_int(f, path);
    if (maxval != 255 || width <= 0 || height <= 0) throw IoError("unsupported netpbm header in " + path.string());
    f.get();
    std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height * channels);
    f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (f.gcount() != static_cast<std::streamsize>(data.size())) throw IoError("truncated " + path.string());
    return data;
}

std::string numbered(const char* prefix, int index, const char* ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d.%s", prefix, index, ext);
    return buf;
}

} // namespace

void write_ppm(const std::filesystem::path& path, const RgbImage& image)
{
    write_netpbm(path, "P6", image.height, image.width, image.rgb);
}

RgbImage read_ppm(const std::filesystem::path& path)
{
    RgbImage img;
    img.rgb = read_netpbm(path, "P6", 3, img.height, img.width);
    return img;
}

void write_pgm_mask(const std::filesystem::path& path, std::span<const std::uint8_t> mask, int height, int width)
{
    std::vector<std::uint8_t> scaled(mask.size());
    std::ranges::transform(mask, scaled.begin(), [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
    write_netpbm(path, "P5", height, width, scaled);
}

std::vector<std::uint8_t> read_pgm_mask(const std::filesystem::path& path, int& height, int& width)
{
    auto data = read_netpbm(path, "P5", 1, height, width);
    for (auto& v : data) v = v ? 1 : 0;
    return data;
}

RgbImage frame_image(const VideoClip& clip, int t)
{
    RgbImage img{clip.height, clip.width, std::vector<std::uint8_t>(clip.frame_size())};
    for (int y = 0; y < clip.height; ++y)
        for (int x = 0; x < clip.width; ++x)
            for (int c = 0; c < 3; ++c)
                img.rgb[(static_cast<std::size_t>(y) * clip.width + x) * 3 + c] = clip.at(t, c, y, x);
    return img;
}

std::string frame_file_name(int index) { return numbered("frame", index, "ppm"); }
std::string mask_file_name(int index) { return numbered("mask", index, "pgm"); }

void save_clip(const std::filesystem::path& dir, const VideoClip& clip)
{
    std::filesystem::create_directories(dir);
    for (int t = 0; t < clip.num_frames; ++t) write_ppm(dir / frame_file_name(t), frame_image(clip, t));
}

VideoClip load_clip(const std::filesystem::path& dir, int num_frames)
{
    VideoClip clip;
    for (int t = 0; t < num_frames; ++t) {
        RgbImage img = read_ppm(dir / frame_file_name(t));
        if (t == 0) clip = VideoClip(num_frames, img.height, img.width);
        if (img.height != clip.height || img.width != clip.width)
            throw IoError("frame size changes within " + dir.string());
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < 3; ++c)
                    clip.at(t, c, y, x) = img.rgb[(static_cast<std::size_t>(y) * img.width + x) * 3 + c];
    }
    return clip;
}

void save_masklet(const std::filesystem::path& dir, const Masklet& masklet)
{
    std::filesystem::create_directories(dir);
    for (int t = 0; t < masklet.num_frames; ++t)
        write_pgm_mask(dir / mask_file_name(t), masklet.frame(t), masklet.height, masklet.width);
}

Masklet load_masklet(const std::filesystem::path& dir, int num_frames)
{
    Masklet out;
    for (int t = 0; t < num_frames; ++t) {
        int h = 0, w = 0;
        auto data = read_pgm_mask(dir / mask_file_name(t), h, w);
        if (t == 0) out = Masklet(num_frames, h, w);
        if (h != out.height || w != out.width) throw IoError("mask size changes within " + dir.string());
        std::ranges::copy(data, out.frame(t).begin());
    }
    return out;
}

} // namespace ttvrs

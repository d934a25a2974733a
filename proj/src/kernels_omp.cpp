#include "ttvrs/kernels.hpp"

#include <algorithm>

// Work below this many multiply-adds stays on the calling thread.
namespace {
constexpr long kParallelThreshold = 1L << 15;
}

namespace ttvrs::kernels::omp {

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c, int m, int k,
          int n)
{
#pragma omp parallel for schedule(static) if(static_cast<long>(m) * k * n > kParallelThreshold)
    for (int i = 0; i < m; ++i) {
        double* crow = c.data() + static_cast<std::size_t>(i) * n;
        const double* arow = a.data() + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b.data() + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, int m, int k,
             int n)
{
#pragma omp parallel for schedule(static) if(static_cast<long>(m) * k * n > kParallelThreshold)
    for (int i = 0; i < m; ++i) {
        const double* arow = a.data() + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const double* brow = b.data() + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            c[static_cast<std::size_t>(i) * n + j] += acc;
        }
    }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, int m, int k,
             int n)
{
#pragma omp parallel for schedule(static) if(static_cast<long>(m) * k * n > kParallelThreshold)
    for (int i = 0; i < m; ++i) {
        double* crow = c.data() + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = a[static_cast<std::size_t>(p) * m + i];
            if (av == 0.0) continue;
            const double* brow = b.data() + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void im2col(std::span<const double> image, const ConvGeometry& g, std::span<double> cols)
{
    const int ho = g.out_height(), wo = g.out_width();
#pragma omp parallel for schedule(static) if(static_cast<long>(g.col_rows()) * g.col_cols() > kParallelThreshold)
    for (int c = 0; c < g.channels; ++c)
        for (int ky = 0; ky < g.kernel; ++ky)
            for (int kx = 0; kx < g.kernel; ++kx) {
                const int row = (c * g.kernel + ky) * g.kernel + kx;
                double* dst = cols.data() + static_cast<std::size_t>(row) * ho * wo;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        const bool inside = iy >= 0 && iy < g.height && ix >= 0 && ix < g.width;
                        dst[oy * wo + ox] =
                            inside ? image[(static_cast<std::size_t>(c) * g.height + iy) * g.width + ix] : 0.0;
                    }
                }
            }
}

void col2im(std::span<const double> cols, const ConvGeometry& g, std::span<double> image)
{
    const int ho = g.out_height(), wo = g.out_width();
#pragma omp parallel for schedule(static) if(static_cast<long>(g.col_rows()) * g.col_cols() > kParallelThreshold)
    for (int c = 0; c < g.channels; ++c)
        for (int ky = 0; ky < g.kernel; ++ky)
            for (int kx = 0; kx < g.kernel; ++kx) {
                const int row = (c * g.kernel + ky) * g.kernel + kx;
                const double* src = cols.data() + static_cast<std::size_t>(row) * ho * wo;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= g.height) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        if (ix < 0 || ix >= g.width) continue;
                        image[(static_cast<std::size_t>(c) * g.height + iy) * g.width + ix] += src[oy * wo + ox];
                    }
                }
            }
}

void upsample_nearest(std::span<const double> src, std::span<double> dst, int channels, int h, int w,
                      int s)
{
    const int hh = h * s, ww = w * s;
#pragma omp parallel for schedule(static) if(static_cast<long>(channels) * h * w * s * s > kParallelThreshold)
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < hh; ++y)
            for (int x = 0; x < ww; ++x)
                dst[(static_cast<std::size_t>(c) * hh + y) * ww + x] =
                    src[(static_cast<std::size_t>(c) * h + y / s) * w + x / s];
}

void block_sum(std::span<const double> src, std::span<double> dst, int channels, int h, int w, int s)
{
    const int ww = w * s;
#pragma omp parallel for schedule(static) if(static_cast<long>(channels) * h * w * s * s > kParallelThreshold)
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int dy = 0; dy < s; ++dy)
                    for (int dx = 0; dx < s; ++dx)
                        acc += src[(static_cast<std::size_t>(c) * h * s + y * s + dy) * ww + x * s + dx];
                dst[(static_cast<std::size_t>(c) * h + y) * w + x] += acc;
            }
}

void boundary_map(std::span<const std::uint8_t> mask, std::span<std::uint8_t> out, int h, int w)
{
    auto at = [&](int y, int x) -> bool {
        return y >= 0 && y < h && x >= 0 && x < w && mask[static_cast<std::size_t>(y) * w + x] != 0;
    };
#pragma omp parallel for schedule(static) if(static_cast<long>(h) * w > kParallelThreshold)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out[static_cast<std::size_t>(y) * w + x] =
                at(y, x) && (!at(y - 1, x) || !at(y + 1, x) || !at(y, x - 1) || !at(y, x + 1));
}

void dilate_chebyshev(std::span<const std::uint8_t> mask, std::span<std::uint8_t> out, int h, int w,
                      int r)
{
#pragma omp parallel for schedule(static) if(static_cast<long>(h) * w * (2 * r + 1) * (2 * r + 1) > kParallelThreshold)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::uint8_t hit = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r) && !hit; ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx)
                    if (mask[static_cast<std::size_t>(yy) * w + xx]) {
                        hit = 1;
                        break;
                    }
            out[static_cast<std::size_t>(y) * w + x] = hit;
        }
}

} // namespace ttvrs::kernels::omp

#pragma once

// Dense inner loops used by the autograd ops and the metrics.
//
// Every kernel exists twice: `serial::` is the plain reference loop nest and
// `omp::` is the OpenMP version. Both compute each output element with the
// same accumulation order, so their results are bit-identical for any thread
// count; tests/test_kernels.cpp asserts exactly that and bench/ times them.
//
// Matrix arguments are row-major; the multiply kernels accumulate into the
// destination (C += ...), callers zero it when they want plain assignment.

#include <cstdint>
#include <span>

namespace ttvrs::kernels {

struct ConvGeometry {
    int channels = 0;
    int height = 0;
    int width = 0;
    int kernel = 3;
    int stride = 1;
    int pad = 0;

    int out_height() const { return (height + 2 * pad - kernel) / stride + 1; }
    int out_width() const { return (width + 2 * pad - kernel) / stride + 1; }
    int col_rows() const { return channels * kernel * kernel; }
    int col_cols() const { return out_height() * out_width(); }
};

#define TTVRS_KERNEL_DECLS                                                                          \
    /* C[m x n] += A[m x k] * B[k x n] */                                                          \
    void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c, int m,    \
              int k, int n);                                                                       \
    /* C[m x n] += A[m x k] * B[n x k]^T */                                                        \
    void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, int m, \
                 int k, int n);                                                                    \
    /* C[m x n] += A[k x m]^T * B[k x n] */                                                        \
    void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, int m, \
                 int k, int n);                                                                    \
    void im2col(std::span<const double> image, const ConvGeometry& g, std::span<double> cols);     \
    /* image += col2im(cols) */                                                                    \
    void col2im(std::span<const double> cols, const ConvGeometry& g, std::span<double> image);     \
    /* dst[C x (h*s) x (w*s)] = nearest upsample of src[C x h x w] */                              \
    void upsample_nearest(std::span<const double> src, std::span<double> dst, int channels, int h, \
                          int w, int s);                                                           \
    /* dst[C x h x w] += block sums of src[C x (h*s) x (w*s)] */                                   \
    void block_sum(std::span<const double> src, std::span<double> dst, int channels, int h, int w, \
                   int s);                                                                         \
    /* out = 1 where a set pixel has a 4-neighbour that is unset or off-image */                   \
    void boundary_map(std::span<const std::uint8_t> mask, std::span<std::uint8_t> out, int h,      \
                      int w);                                                                      \
    /* out = Chebyshev dilation of mask by radius r */                                             \
    void dilate_chebyshev(std::span<const std::uint8_t> mask, std::span<std::uint8_t> out, int h,  \
                          int w, int r);

namespace serial {
TTVRS_KERNEL_DECLS
}

namespace omp {
TTVRS_KERNEL_DECLS
}

#undef TTVRS_KERNEL_DECLS

} // namespace ttvrs::kernels

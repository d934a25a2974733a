#include "ttvrs/kernels.hpp"
#include "ttvrs/rng.hpp"

#include <doctest.h>
#include <omp.h>

#include <vector>

using namespace ttvrs;
namespace k = ttvrs::kernels;

namespace {

std::vector<double> random_values(Rng& rng, std::size_t n)
{
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

std::vector<std::uint8_t> random_mask(Rng& rng, std::size_t n, double p = 0.4)
{
    std::vector<std::uint8_t> v(n);
    for (auto& x : v) x = rng.uniform() < p ? 1 : 0;
    return v;
}

} // namespace

TEST_CASE("gemm variants match a naive triple loop")
{
    Rng rng(1);
    const int m = 7, kk = 5, n = 9;
    auto a = random_values(rng, m * kk), b = random_values(rng, kk * n);
    std::vector<double> ref(m * n, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            for (int p = 0; p < kk; ++p) ref[i * n + j] += a[i * kk + p] * b[p * n + j];

    std::vector<double> c(m * n, 0.0);
    k::serial::gemm(a, b, c, m, kk, n);
    for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));

    // B transposed: bt[j][p] = b[p][j]
    std::vector<double> bt(n * kk);
    for (int p = 0; p < kk; ++p)
        for (int j = 0; j < n; ++j) bt[j * kk + p] = b[p * n + j];
    std::vector<double> c2(m * n, 0.0);
    k::serial::gemm_nt(a, bt, c2, m, kk, n);
    for (int i = 0; i < m * n; ++i) CHECK(c2[i] == doctest::Approx(ref[i]).epsilon(1e-12));

    std::vector<double> at(kk * m);
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < kk; ++p) at[p * m + i] = a[i * kk + p];
    std::vector<double> c3(m * n, 0.0);
    k::serial::gemm_tn(at, b, c3, m, kk, n);
    for (int i = 0; i < m * n; ++i) CHECK(c3[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("serial and OpenMP kernels are bit-identical")
{
    Rng rng(2);
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        // sizes above the parallel threshold
        const int m = 64, kk = 96, n = 80;
        auto a = random_values(rng, m * kk), b = random_values(rng, kk * n);
        std::vector<double> cs(m * n, 0.5), co(m * n, 0.5);
        k::serial::gemm(a, b, cs, m, kk, n);
        k::omp::gemm(a, b, co, m, kk, n);
        CHECK(cs == co);

        auto bt = random_values(rng, n * kk);
        std::fill(cs.begin(), cs.end(), 0.0);
        std::fill(co.begin(), co.end(), 0.0);
        k::serial::gemm_nt(a, bt, cs, m, kk, n);
        k::omp::gemm_nt(a, bt, co, m, kk, n);
        CHECK(cs == co);

        auto at = random_values(rng, kk * m);
        std::fill(cs.begin(), cs.end(), 0.0);
        std::fill(co.begin(), co.end(), 0.0);
        k::serial::gemm_tn(at, b, cs, m, kk, n);
        k::omp::gemm_tn(at, b, co, m, kk, n);
        CHECK(cs == co);

        k::ConvGeometry g{16, 32, 32, 3, 2, 1};
        auto img = random_values(rng, 16 * 32 * 32);
        std::vector<double> cols_s(g.col_rows() * g.col_cols()), cols_o(cols_s.size());
        k::serial::im2col(img, g, cols_s);
        k::omp::im2col(img, g, cols_o);
        CHECK(cols_s == cols_o);
        std::vector<double> back_s(img.size(), 0.0), back_o(img.size(), 0.0);
        k::serial::col2im(cols_s, g, back_s);
        k::omp::col2im(cols_s, g, back_o);
        CHECK(back_s == back_o);

        auto small = random_values(rng, 32 * 16 * 16);
        std::vector<double> up_s(32 * 64 * 64), up_o(up_s.size());
        k::serial::upsample_nearest(small, up_s, 32, 16, 16, 4);
        k::omp::upsample_nearest(small, up_o, 32, 16, 16, 4);
        CHECK(up_s == up_o);
        std::vector<double> bs_s(small.size(), 0.0), bs_o(small.size(), 0.0);
        k::serial::block_sum(up_s, bs_s, 32, 16, 16, 4);
        k::omp::block_sum(up_s, bs_o, 32, 16, 16, 4);
        CHECK(bs_s == bs_o);

        auto mask = random_mask(rng, 256 * 256);
        std::vector<std::uint8_t> bm_s(mask.size()), bm_o(mask.size()), dl_s(mask.size()), dl_o(mask.size());
        k::serial::boundary_map(mask, bm_s, 256, 256);
        k::omp::boundary_map(mask, bm_o, 256, 256);
        CHECK(bm_s == bm_o);
        k::serial::dilate_chebyshev(mask, dl_s, 256, 256, 2);
        k::omp::dilate_chebyshev(mask, dl_o, 256, 256, 2);
        CHECK(dl_s == dl_o);
    }
    omp_set_num_threads(1);
}

TEST_CASE("col2im is the adjoint of im2col")
{
    // <im2col(x), y> == <x, col2im(y)> for any x, y
    Rng rng(3);
    for (auto g : {k::ConvGeometry{3, 8, 8, 3, 2, 1}, k::ConvGeometry{2, 5, 7, 3, 1, 1}, k::ConvGeometry{4, 6, 6, 1, 1, 0}}) {
        auto x = random_values(rng, static_cast<std::size_t>(g.channels) * g.height * g.width);
        auto y = random_values(rng, static_cast<std::size_t>(g.col_rows()) * g.col_cols());
        std::vector<double> cols(y.size()), back(x.size(), 0.0);
        k::serial::im2col(x, g, cols);
        k::serial::col2im(y, g, back);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) lhs += cols[i] * y[i];
        for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * back[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("boundary and dilation match brute force")
{
    Rng rng(4);
    const int h = 11, w = 13;
    for (int trial = 0; trial < 20; ++trial) {
        auto mask = random_mask(rng, h * w, 0.5);
        auto on = [&](int y, int x) { return y >= 0 && y < h && x >= 0 && x < w && mask[y * w + x]; };
        std::vector<std::uint8_t> b(h * w), d(h * w);
        k::serial::boundary_map(mask, b, h, w);
        const int r = trial % 3;
        k::serial::dilate_chebyshev(mask, d, h, w, r);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const bool edge = on(y, x) && (!on(y - 1, x) || !on(y + 1, x) || !on(y, x - 1) || !on(y, x + 1));
                CHECK(b[y * w + x] == (edge ? 1 : 0));
                bool near = false;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) near = near || on(y + dy, x + dx);
                CHECK(d[y * w + x] == (near ? 1 : 0));
            }
    }
}

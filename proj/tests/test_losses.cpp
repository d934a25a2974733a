#include "ttvrs/losses.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace ttvrs;

namespace {

std::vector<std::uint8_t> random_mask(Rng& rng, int n)
{
    std::vector<std::uint8_t> m(static_cast<std::size_t>(n));
    for (auto& v : m) v = rng.uniform() < 0.5 ? 1 : 0;
    return m;
}

ag::Var vec(const oracle::Vec& v) { return ag::parameter(Tensor({static_cast<int>(v.size())}, v)); }

} // namespace

TEST_CASE("bce examples")
{
    std::vector<std::uint8_t> t{1, 0, 1, 0};
    CHECK(bce_loss(vec({100, -100, 100, -100}), t).item() < 1e-6);
    CHECK(bce_loss(vec({0, 0, 0, 0}), t).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::isfinite(bce_loss(vec({-1000, 1000, 0, 0}), t).item()));
}

TEST_CASE("dice examples")
{
    std::vector<std::uint8_t> zeros(64, 0);
    CHECK(dice_loss(vec(oracle::Vec(64, 50.0)), zeros).item() == doctest::Approx(1.0 - 1.0 / 65.0).epsilon(1e-9));
    CHECK(dice_loss(vec(oracle::Vec(64, -50.0)), zeros).item() < 1e-6);
    std::vector<std::uint8_t> t{1, 1, 0, 0};
    CHECK(dice_loss(vec({50, 50, -50, -50}), t).item() < 1e-6);
}

TEST_CASE("text loss examples")
{
    Tensor uniform({3, 32});
    const std::vector<int> target{1, 5, 31};
    CHECK(text_loss(ag::constant(uniform), target).item() == doctest::Approx(std::log(32.0)).epsilon(1e-12));
    Tensor peaked({3, 32});
    for (int r = 0; r < 3; ++r) peaked.at(r, target[r]) = 100.0;
    CHECK(text_loss(ag::constant(peaked), target).item() < 1e-6);
    CHECK_THROWS_AS(text_loss(ag::constant(peaked), std::vector<int>{1, 2}), ShapeError);
}

TEST_CASE("losses match elementwise oracles")
{
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rng.integer(1, 20);
        auto logits = oracle::random_vec(rng, n, -4.0, 4.0);
        auto t = random_mask(rng, n);
        CHECK(bce_loss(vec(logits), t).item() == doctest::Approx(oracle::bce(logits, t)).epsilon(1e-9));
        CHECK(dice_loss(vec(logits), t).item() == doctest::Approx(oracle::dice(logits, t)).epsilon(1e-9));

        const int rows = rng.integer(1, 6), v = rng.integer(2, 10);
        oracle::Mat m;
        Tensor tl({rows, v});
        std::vector<int> target;
        for (int r = 0; r < rows; ++r) {
            m.push_back(oracle::random_vec(rng, v, -3.0, 3.0));
            for (int c = 0; c < v; ++c) tl.at(r, c) = m[r][c];
            target.push_back(rng.integer(0, v - 1));
        }
        CHECK(text_loss(ag::constant(tl), target).item() == doctest::Approx(oracle::cross_entropy(m, target)).epsilon(1e-9));
    }
}

TEST_CASE("loss gradients match finite differences")
{
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rng.integer(2, 12);
        auto logits = oracle::random_vec(rng, n, -3.0, 3.0);
        auto t = random_mask(rng, n);
        for (int which = 0; which < 2; ++which) {
            auto f = [&](const oracle::Vec& x) { return which == 0 ? oracle::bce(x, t) : oracle::dice(x, t); };
            auto x = vec(logits);
            ag::backward(which == 0 ? bce_loss(x, t) : dice_loss(x, t));
            for (int i = 0; i < n; ++i) {
                auto up = logits, down = logits;
                up[i] += 1e-6;
                down[i] -= 1e-6;
                CHECK(oracle::relative_error(x.grad()[i], (f(up) - f(down)) / 2e-6) < 1e-5);
            }
        }
    }
}

TEST_CASE("loss ranges")
{
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = rng.integer(1, 30);
        auto logits = oracle::random_vec(rng, n, -20.0, 20.0);
        auto t = random_mask(rng, n);
        const double d = dice_loss(vec(logits), t).item();
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(bce_loss(vec(logits), t).item() >= 0.0);
    }
}

TEST_CASE("total loss")
{
    LossWeights w;
    CHECK(total_loss(LossComponents{0.0, 0.1, 0.2, 0.0}, w) == doctest::Approx(0.3));
    CHECK(total_loss(LossComponents{}, w) == 0.0);
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        LossComponents c{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        LossWeights lw{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        const double expected = lw.lambda_txt * c.txt + lw.lambda_mask * lw.lambda_bce * c.bce +
                                lw.lambda_mask * lw.lambda_dice * c.dice + lw.lambda_occ * c.occ;
        CHECK(total_loss(c, lw) == doctest::Approx(expected).epsilon(1e-12));
        auto var = total_loss(ag::constant(Tensor::scalar(c.txt)), ag::constant(Tensor::scalar(c.bce)),
                              ag::constant(Tensor::scalar(c.dice)), ag::constant(Tensor::scalar(c.occ)), lw);
        CHECK(var.item() == doctest::Approx(expected).epsilon(1e-12));
        // monotone in each component
        LossComponents bigger = c;
        bigger.dice += 0.5;
        CHECK(total_loss(bigger, lw) >= total_loss(c, lw));
    }
    CHECK_THROWS_AS((LossWeights{-1.0, 1, 1, 1, 1}.validate()), std::invalid_argument);
}

TEST_CASE("occlusion loss is BCE over presence labels")
{
    std::vector<ag::Var> s{ag::constant(Tensor::scalar(2.0)), ag::constant(Tensor::scalar(-1.0))};
    std::vector<std::uint8_t> present{1, 0};
    CHECK(occlusion_loss(s, present).item() == doctest::Approx(oracle::bce({2.0, -1.0}, present)));
    CHECK_THROWS_AS(occlusion_loss(s, std::vector<std::uint8_t>{1}), ShapeError);
}

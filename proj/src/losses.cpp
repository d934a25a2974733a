#include "ttvrs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ttvrs {

namespace {

void check_sizes(const ag::Var& logits, std::size_t n, const char* what)
{
    if (logits.size() != n)
        throw ShapeError(std::string(what) + ": " + std::to_string(logits.size()) + " logits vs " +
                         std::to_string(n) + " targets");
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

} // namespace

ag::Var bce_loss(const ag::Var& logits, std::span<const std::uint8_t> target)
{
    check_sizes(logits, target.size(), "bce_loss");
    if (target.empty()) throw ShapeError("bce_loss: empty input");
    const auto& x = logits.value();
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        acc += std::max(x[i], 0.0) - x[i] * target[i] + std::log1p(std::exp(-std::abs(x[i])));
    const double inv = 1.0 / static_cast<double>(x.size());
    std::vector<std::uint8_t> t(target.begin(), target.end());
    return ag::make_op(Tensor::scalar(acc * inv), {logits}, [t = std::move(t), inv](ag::Node& self) {
        auto& p = *self.parents[0];
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * inv * (sigmoid(p.value[i]) - t[i]);
    });
}

ag::Var dice_loss(const ag::Var& logits, std::span<const std::uint8_t> target)
{
    check_sizes(logits, target.size(), "dice_loss");
    const auto& x = logits.value();
    std::vector<double> p(x.size());
    double pt = 0.0, ps = 0.0, ts = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        p[i] = sigmoid(x[i]);
        pt += p[i] * target[i];
        ps += p[i];
        ts += target[i];
    }
    const double num = 2.0 * pt + 1.0, den = ps + ts + 1.0;
    std::vector<std::uint8_t> t(target.begin(), target.end());
    return ag::make_op(Tensor::scalar(1.0 - num / den), {logits},
                       [p = std::move(p), t = std::move(t), num, den](ag::Node& self) {
                           auto& g = self.parents[0]->grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               // d(1 - num/den)/dp_i, then chain through the sigmoid
                               const double dp = -(2.0 * t[i] * den - num) / (den * den);
                               g[i] += self.grad[0] * dp * p[i] * (1.0 - p[i]);
                           }
                       });
}

ag::Var text_loss(const ag::Var& logits, std::span<const int> target)
{
    const auto& x = logits.value();
    if (x.rank() != 2 || x.dim(0) != static_cast<int>(target.size()))
        throw ShapeError("text_loss: logits " + shape_str(x.shape()) + " vs " + std::to_string(target.size()) +
                         " targets");
    const int rows = x.dim(0), v = x.dim(1);
    if (rows == 0) throw ShapeError("text_loss: empty sequence");
    Tensor probs({rows, v});
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) {
        if (target[r] < 0 || target[r] >= v) throw std::out_of_range("text_loss: token id outside the vocabulary");
        const double* row = x.data() + static_cast<std::size_t>(r) * v;
        const double mx = *std::max_element(row, row + v);
        double z = 0.0;
        for (int j = 0; j < v; ++j) z += std::exp(row[j] - mx);
        for (int j = 0; j < v; ++j) probs.at(r, j) = std::exp(row[j] - mx) / z;
        acc += -(row[target[r]] - mx - std::log(z));
    }
    const double inv = 1.0 / rows;
    std::vector<int> t(target.begin(), target.end());
    return ag::make_op(Tensor::scalar(acc * inv), {logits},
                       [probs = std::move(probs), t = std::move(t), inv, v](ag::Node& self) {
                           auto& g = self.parents[0]->grad_buffer();
                           for (std::size_t r = 0; r < t.size(); ++r)
                               for (int j = 0; j < v; ++j) {
                                   const double d = probs[r * v + j] - (j == t[r] ? 1.0 : 0.0);
                                   g[r * v + j] += self.grad[0] * inv * d;
                               }
                       });
}

ag::Var occlusion_loss(const std::vector<ag::Var>& scores, std::span<const std::uint8_t> present)
{
    if (scores.size() != present.size()) throw ShapeError("occlusion_loss: scores and labels differ in length");
    return bce_loss(ag::stack_scalars(scores), present);
}

void LossWeights::validate() const
{
    for (double w : {lambda_txt, lambda_mask, lambda_bce, lambda_dice, lambda_occ})
        if (!(w >= 0.0)) throw std::invalid_argument("loss weights must be non-negative");
}

double total_loss(const LossComponents& c, const LossWeights& w)
{
    return w.lambda_txt * c.txt + w.lambda_mask * (w.lambda_bce * c.bce + w.lambda_dice * c.dice) +
           w.lambda_occ * c.occ;
}

ag::Var total_loss(const ag::Var& txt, const ag::Var& bce, const ag::Var& dice, const ag::Var& occ,
                   const LossWeights& w)
{
    auto mask = ag::add(ag::scale(bce, w.lambda_bce), ag::scale(dice, w.lambda_dice));
    return ag::add(ag::add(ag::scale(txt, w.lambda_txt), ag::scale(mask, w.lambda_mask)), ag::scale(occ, w.lambda_occ));
}

} // namespace ttvrs

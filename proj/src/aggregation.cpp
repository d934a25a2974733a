#include "ttvrs/aggregation.hpp"

#include <cmath>
#include <stdexcept>

namespace ttvrs {

double cosine_similarity(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) throw ZeroNormError("cosine similarity of a zero-norm vector");
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

SimilarityWeights similarity_weights(const ProjectedTokenSet& tokens)
{
    std::vector<ag::Var> sims;
    for (int i = 0; i < tokens.frames(); ++i) sims.push_back(ag::cosine(ag::row(tokens.seg, i), tokens.tak));
    auto s = ag::stack_scalars(sims);
    auto w = ag::softmax(s);
    return {s, w};
}

FusedToken aggregate(const ProjectedTokenSet& tokens, const AggregationConfig& config)
{
    if (config.alpha < 0.0) throw std::invalid_argument("fusion coefficient must be non-negative");
    auto sw = similarity_weights(tokens);
    const int n = tokens.frames();
    // weights as a 1 x T' row times the T' x d seg matrix
    auto mixed = ag::reshape(ag::matmul(ag::reshape(sw.weights, {1, n}), tokens.seg), {tokens.seg.value().cols()});
    FusedToken out;
    out.vector = ag::add(tokens.tak, ag::scale(mixed, config.alpha));
    out.weights = sw.weights.value().raw();
    out.similarities = sw.similarities.value().raw();
    return out;
}

int training_keyframe(const ProjectedTokenSet& tokens)
{
    std::vector<double> sims;
    const auto& seg = tokens.seg.value();
    for (int i = 0; i < seg.rows(); ++i)
        sims.push_back(cosine_similarity({seg.data() + static_cast<std::size_t>(i) * seg.cols(),
                                          static_cast<std::size_t>(seg.cols())},
                                         tokens.tak.value().span()));
    return argmax_lowest(sims);
}

int argmax_lowest(std::span<const double> values)
{
    if (values.empty()) throw std::invalid_argument("argmax of an empty sequence");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

} // namespace ttvrs

#include "bflmec/aggregate.hpp"

#include <stdexcept>

namespace bflmec::fl {

GradientVector weighted_average(std::span<const GradientVector> vecs,
                                std::span<const double> weights) {
    if (vecs.empty()) throw std::invalid_argument("weighted_average: empty input");
    if (vecs.size() != weights.size())
        throw std::invalid_argument("weighted_average: length mismatch");
    const size_t dim = vecs.front().values.size();
    for (const auto& v : vecs)
        if (v.values.size() != dim) throw std::invalid_argument("weighted_average: dimension mismatch");
    for (double w : weights)
        if (!(w >= 0)) throw std::invalid_argument("weighted_average: negative weight");

    GradientVector out;
    out.values.assign(dim, 0.0);
    for (size_t i = 0; i < vecs.size(); ++i)
        for (size_t j = 0; j < dim; ++j) out.values[j] += weights[i] * vecs[i].values[j];
    return out;
}

GradientVector simple_average(std::span<const GradientVector> vecs) {
    if (vecs.empty()) throw std::invalid_argument("simple_average: empty input");
    std::vector<double> uniform(vecs.size(), 1.0 / static_cast<double>(vecs.size()));
    return weighted_average(vecs, uniform);
}

}  // namespace bflmec::fl

#include "bflmec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bflmec::fl {

namespace {

// Softmax probabilities for one sample, numerically stabilized.
void softmax_probs(const Model& m, const std::vector<double>& x, std::vector<double>& probs) {
    const uint32_t C = m.classes, F = m.features;
    probs.resize(C);
    double maxlogit = -1e300;
    for (uint32_t c = 0; c < C; ++c) {
        double z = m.bias(c);
        const double* w = m.params.data() + size_t(c) * F;
        for (uint32_t f = 0; f < F; ++f) z += w[f] * x[f];
        probs[c] = z;
        maxlogit = std::max(maxlogit, z);
    }
    double sum = 0;
    for (auto& p : probs) {
        p = std::exp(p - maxlogit);
        sum += p;
    }
    for (auto& p : probs) p /= sum;
}

}  // namespace

std::vector<double> local_update(const Model& start, const Dataset& data, const TrainConfig& cfg,
                                 Rng& rng, uint64_t* step_counter) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("local_update: empty dataset");

    Model m = start;
    const uint32_t C = m.classes, F = m.features;
    std::vector<double> probs;
    std::vector<double> grad(m.params.size());
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t pos = 0; pos < order.size(); pos += cfg.batch) {
            const size_t end = std::min(order.size(), pos + cfg.batch);
            const double inv = 1.0 / static_cast<double>(end - pos);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (size_t i = pos; i < end; ++i) {
                const size_t s = order[i];
                const auto& x = data.features[s];
                softmax_probs(m, x, probs);
                for (uint32_t c = 0; c < C; ++c) {
                    const double delta = (probs[c] - (data.labels[s] == c ? 1.0 : 0.0)) * inv;
                    double* g = grad.data() + size_t(c) * F;
                    for (uint32_t f = 0; f < F; ++f) g[f] += delta * x[f];
                    grad[size_t(C) * F + c] += delta;
                }
            }
            for (size_t j = 0; j < m.params.size(); ++j) m.params[j] -= cfg.eta * grad[j];
            if (step_counter) ++*step_counter;
        }
        for (double v : m.params)
            if (!std::isfinite(v)) throw DivergenceError("local_update: non-finite parameters");
    }
    return m.params;
}

double cross_entropy_loss(const Model& m, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("loss: empty dataset");
    std::vector<double> probs;
    double total = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        softmax_probs(m, data.features[i], probs);
        total += -std::log(std::max(probs[data.labels[i]], 1e-300));
    }
    return total / static_cast<double>(data.size());
}

double evaluate(const Model& m, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
    std::vector<double> probs;
    size_t correct = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        softmax_probs(m, data.features[i], probs);
        uint32_t best = 0;
        for (uint32_t c = 1; c < m.classes; ++c)
            if (probs[c] > probs[best]) best = c;  // strict: ties keep lowest index
        if (best == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

double average_accuracy(const std::vector<double>& accs) {
    if (accs.empty()) throw std::invalid_argument("average_accuracy: empty list");
    double sum = 0;
    for (double a : accs) sum += a;
    return sum / static_cast<double>(accs.size());
}

}  // namespace bflmec::fl

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bflmec/dataset.hpp"
#include "bflmec/gradient.hpp"
#include "bflmec/rng.hpp"

namespace bflmec::fl {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Multinomial logistic classifier. Parameters are stored flat
// (class-major weight matrix followed by the bias vector) so a Model and a
// GradientVector are interconvertible without reshaping logic elsewhere.
struct Model {
    uint32_t classes = 0;
    uint32_t features = 0;
    std::vector<double> params;  // classes*features weights, then classes biases

    static Model zeros(uint32_t classes, uint32_t features) {
        Model m;
        m.classes = classes;
        m.features = features;
        m.params.assign(size_t(classes) * features + classes, 0.0);
        return m;
    }
    double weight(uint32_t c, uint32_t f) const { return params[size_t(c) * features + f]; }
    double bias(uint32_t c) const { return params[size_t(classes) * features + c]; }
    size_t dim() const { return params.size(); }

    void load(const std::vector<double>& flat) {
        if (flat.size() != params.size()) throw std::invalid_argument("model: dimension mismatch");
        params = flat;
    }
};

struct TrainConfig {
    double eta = 0.01;
    uint32_t epochs = 5;
    uint32_t batch = 10;

    void validate() const {
        if (!(eta >= 0)) throw std::invalid_argument("train: eta must be nonnegative");
        if (epochs < 1 || batch < 1) throw std::invalid_argument("train: epochs and batch >= 1");
    }
};

// E epochs of minibatch SGD on softmax cross-entropy; batches are seeded
// shuffles re-drawn per epoch, ceil(|D|/B) steps each. Returns the resulting
// flat parameter vector. step_counter, when given, counts SGD steps.
std::vector<double> local_update(const Model& start, const Dataset& data, const TrainConfig& cfg,
                                 Rng& rng, uint64_t* step_counter = nullptr);

// Mean softmax cross-entropy over the dataset.
double cross_entropy_loss(const Model& m, const Dataset& data);

// Fraction of argmax-correct predictions; ties go to the lowest class index.
double evaluate(const Model& m, const Dataset& data);

double average_accuracy(const std::vector<double>& accs);

}  // namespace bflmec::fl

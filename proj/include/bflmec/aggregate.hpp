#pragma once

#include <span>
#include <vector>

#include "bflmec/gradient.hpp"

namespace bflmec::fl {

// Contribution-weighted aggregation: sum_i p_i * w_i, accumulated strictly
// left to right. Weights must be nonnegative; caller normalizes to sum 1.
GradientVector weighted_average(std::span<const GradientVector> vecs, std::span<const double> weights);

// Uniform special case. Delegates to weighted_average with p_i = 1/n, so the
// two routes agree bit for bit.
GradientVector simple_average(std::span<const GradientVector> vecs);

}  // namespace bflmec::fl

#pragma once

#include <cstddef>
#include <span>

namespace selfmi {

// Regression + binary-classification scores over one evaluation split.
// Binary scores exist in two conventions: `nonneg` keeps every sample and
// treats label 0 as positive-side; `posneg` drops samples whose label is
// exactly 0 before scoring.
struct MetricsReport {
    double mae = 0.0;
    double corr = 0.0;
    double acc2_nonneg = 0.0;
    double acc2_posneg = 0.0;
    double f1_nonneg = 0.0;
    double f1_posneg = 0.0;
    std::size_t n_eval = 0;  // samples scored (before posneg exclusion)
};

enum class Binarization { nonneg, posneg };

struct BinaryScores {
    double acc2 = 0.0;
    double f1 = 0.0;
    std::size_t n = 0;  // samples actually scored under the convention
};

// Mean absolute error. Throws ContractError on empty or mismatched inputs.
double mae(std::span<const double> pred, std::span<const double> target);

// Sample Pearson correlation, symmetric in its arguments. Throws
// ContractError for length < 2 or mismatched inputs and ValueError when
// either vector is constant (undefined correlation).
double pearson(std::span<const double> a, std::span<const double> b);

// Sign-based binary accuracy and F1 (positive-side is the positive class;
// value < 0 is negative, anything else positive-side). Under `posneg`,
// samples with target exactly 0 are excluded first; if that empties the
// evaluation, throws ContractError. No true or predicted positives give
// f1 = 0 rather than a division by zero.
BinaryScores binary_scores(std::span<const double> pred,
                           std::span<const double> target,
                           Binarization convention);

// Full report over one split: strict pearson (throws on constant vectors).
MetricsReport evaluate(std::span<const double> pred,
                       std::span<const double> target);

}  // namespace selfmi

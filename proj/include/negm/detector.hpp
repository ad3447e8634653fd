#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "negm/matrix.hpp"

namespace negm {

class BiganModel;
struct FeatureMatrix;

// Per-row Euclidean norm of x - G(E(x)).
std::vector<double> reconstruction_loss(const BiganModel& model, const Matrix& x);

// Median training reconstruction loss per known class, in class order.
struct BaselineTable {
    std::vector<std::string> class_names;
    std::vector<double> medians;

    std::size_t class_count() const { return medians.size(); }
};

BaselineTable fit_baselines(const BiganModel& model, const FeatureMatrix& train);

// UCS_i = min over classes of |loss_i - baseline|.
std::vector<double> ucs_scores(const std::vector<double>& losses, const BaselineTable& baselines);

// Threshold state for the online stream. The first batch flags the top
// first_batch_quantile fraction of scores; later batches target the running
// EMA of previously flagged fractions.
struct ThresholdPolicy {
    double first_batch_quantile = 0.10;
    double ema_decay = 0.7;
    double flagged_fraction_estimate = 0.0;
    bool initialized = false;

    void validate() const;
};

struct ExtractionResult {
    std::vector<std::size_t> kc_indices;
    std::vector<std::size_t> uc_indices;
    double threshold = 0.0;
    ThresholdPolicy policy;  // updated state
};

ExtractionResult extract_unknown(const std::vector<double>& scores, const ThresholdPolicy& policy,
                                 std::size_t batch_index);

double median(std::vector<double> values);

}  // namespace negm

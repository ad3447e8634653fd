#include "negm/detector.hpp"

#include <algorithm>
#include <cmath>

#include "negm/bigan.hpp"
#include "negm/dataset.hpp"
#include "negm/error.hpp"

namespace negm {

std::vector<double> reconstruction_loss(const BiganModel& model, const Matrix& x) {
    const Matrix rec = model.reconstruct(x);
    std::vector<double> losses(x.rows, 0.0);
    for (std::size_t r = 0; r < x.rows; ++r) {
        losses[r] = std::sqrt(squared_distance(x.row_ptr(r), rec.row_ptr(r), x.cols));
    }
    return losses;
}

double median(std::vector<double> values) {
    if (values.empty()) fail(ErrorKind::usage, "median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BaselineTable fit_baselines(const BiganModel& model, const FeatureMatrix& train) {
    if (train.class_names.empty()) fail(ErrorKind::usage, "fit_baselines: no classes in data");
    const std::vector<double> losses = reconstruction_loss(model, train.data);
    BaselineTable table;
    for (const std::string& cls : train.class_names) {
        std::vector<double> class_losses;
        for (std::size_t r = 0; r < train.labels.size(); ++r)
            if (train.labels[r] == cls) class_losses.push_back(losses[r]);
        if (class_losses.empty())
            fail(ErrorKind::usage, "fit_baselines: class '" + cls + "' has no instances");
        table.class_names.push_back(cls);
        table.medians.push_back(median(std::move(class_losses)));
    }
    return table;
}

std::vector<double> ucs_scores(const std::vector<double>& losses, const BaselineTable& baselines) {
    if (baselines.medians.empty()) fail(ErrorKind::usage, "ucs_scores: empty baseline table");
    std::vector<double> scores(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) {
        double best = std::abs(losses[i] - baselines.medians[0]);
        for (std::size_t k = 1; k < baselines.medians.size(); ++k)
            best = std::min(best, std::abs(losses[i] - baselines.medians[k]));
        scores[i] = best;
    }
    return scores;
}

void ThresholdPolicy::validate() const {
    if (first_batch_quantile <= 0.0 || first_batch_quantile >= 1.0)
        fail(ErrorKind::usage, "threshold policy: first_batch_quantile must lie in (0, 1)");
    if (ema_decay <= 0.0 || ema_decay >= 1.0)
        fail(ErrorKind::usage, "threshold policy: ema_decay must lie in (0, 1)");
    if (flagged_fraction_estimate < 0.0 || flagged_fraction_estimate > 1.0)
        fail(ErrorKind::usage, "threshold policy: estimate out of [0, 1]");
}

ExtractionResult extract_unknown(const std::vector<double>& scores, const ThresholdPolicy& policy,
                                 std::size_t batch_index) {
    policy.validate();
    if (scores.empty()) fail(ErrorKind::usage, "extract_unknown: empty batch");
    const std::size_t b = scores.size();

    const double target_fraction =
        (batch_index == 0 || !policy.initialized) ? policy.first_batch_quantile
                                                  : policy.flagged_fraction_estimate;
    // Number of instances the threshold aims to flag.
    std::size_t target = static_cast<std::size_t>(
        std::floor(target_fraction * static_cast<double>(b) + 1e-9));
    target = std::min(target, b - 1);

    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end());
    // Strictly-greater comparison resolves threshold ties to the known side.
    const double threshold = sorted[b - 1 - target];

    ExtractionResult result;
    result.threshold = threshold;
    for (std::size_t i = 0; i < b; ++i)
        (scores[i] > threshold ? result.uc_indices : result.kc_indices).push_back(i);

    const double flagged_fraction =
        static_cast<double>(result.uc_indices.size()) / static_cast<double>(b);
    result.policy = policy;
    if (!result.policy.initialized) {
        result.policy.flagged_fraction_estimate = flagged_fraction;
        result.policy.initialized = true;
    } else {
        result.policy.flagged_fraction_estimate =
            policy.ema_decay * policy.flagged_fraction_estimate +
            (1.0 - policy.ema_decay) * flagged_fraction;
    }
    return result;
}

}  // namespace negm

#include "negm/metrics.hpp"

#include <cmath>

#include "negm/error.hpp"

namespace negm {

ConfusionCounts confusion(const std::vector<bool>& predicted_uc,
                          const std::vector<bool>& true_uc) {
    if (predicted_uc.size() != true_uc.size())
        fail(ErrorKind::eval, "confusion: flag vectors have different lengths");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted_uc.size(); ++i) {
        if (predicted_uc[i] && true_uc[i])
            ++c.true_positives;
        else if (predicted_uc[i])
            ++c.false_positives;
        else if (true_uc[i])
            ++c.false_negatives;
        else
            ++c.true_negatives;
    }
    return c;
}

double f1_unknown(const std::vector<bool>& predicted_uc, const std::vector<bool>& true_uc) {
    const ConfusionCounts c = confusion(predicted_uc, true_uc);
    const double denom = 2.0 * static_cast<double>(c.true_positives) +
                         static_cast<double>(c.false_positives) +
                         static_cast<double>(c.false_negatives);
    if (denom == 0.0) return 0.0;
    return 2.0 * static_cast<double>(c.true_positives) / denom;
}

double rmse(const std::vector<double>& predicted, const std::vector<double>& truth) {
    if (predicted.size() != truth.size() || predicted.empty())
        fail(ErrorKind::eval, "rmse: prediction/truth lengths differ or are empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - truth[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(predicted.size()));
}

double s_r2(double rmse_m, double rmse_bl) {
    if (rmse_m < 0.0 || rmse_bl < 0.0) fail(ErrorKind::eval, "s_r2: negative RMSE");
    if (rmse_m == rmse_bl) return 0.0;
    if (rmse_m < rmse_bl) {
        if (rmse_bl == 0.0) return 0.0;  // unreachable given the branch above
        return 1.0 - rmse_m / rmse_bl;
    }
    return rmse_bl / rmse_m - 1.0;
}

SR2Report sr2_report(const std::vector<double>& model_predictions,
                     const std::vector<double>& baseline_predictions,
                     const std::vector<double>& truth) {
    SR2Report r;
    r.rmse_m = rmse(model_predictions, truth);
    r.rmse_bl = rmse(baseline_predictions, truth);
    r.value = s_r2(r.rmse_m, r.rmse_bl);
    return r;
}

}  // namespace negm

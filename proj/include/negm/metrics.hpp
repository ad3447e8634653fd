#pragma once

#include <cstddef>
#include <vector>

namespace negm {

// Unknown is the positive class.
struct ConfusionCounts {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::size_t true_negatives = 0;
};

ConfusionCounts confusion(const std::vector<bool>& predicted_uc,
                          const std::vector<bool>& true_uc);

// F1 over unknown-class flags; zero when the denominator vanishes.
double f1_unknown(const std::vector<bool>& predicted_uc, const std::vector<bool>& true_uc);

double rmse(const std::vector<double>& predicted, const std::vector<double>& truth);

// Symmetrical R-squared between a model RMSE and a baseline RMSE:
//   rmse_m < rmse_bl : 1 - rmse_m / rmse_bl
//   rmse_m > rmse_bl : rmse_bl / rmse_m - 1
//   equal (incl. both zero): 0;   rmse_bl == 0 < rmse_m : -1
double s_r2(double rmse_m, double rmse_bl);

struct SR2Report {
    double rmse_m = 0.0;
    double rmse_bl = 0.0;
    double value = 0.0;
};

SR2Report sr2_report(const std::vector<double>& model_predictions,
                     const std::vector<double>& baseline_predictions,
                     const std::vector<double>& truth);

}  // namespace negm

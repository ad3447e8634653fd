#pragma once

#include <cstdint>
#include <vector>

#include "negm/matrix.hpp"
#include "negm/rng.hpp"

namespace negm {

// One Gaussian of the latent mixture. The factor is the lower Cholesky
// triangle of the (regularized) covariance, so covariance() = A·Aᵀ and
// sampling uses z = A·eps + mean.
struct GaussianComponent {
    std::vector<double> mean;  // length p
    Matrix factor;             // p × p, lower triangular, nonnegative diagonal

    Matrix covariance() const;
};

struct MixturePrior {
    std::vector<GaussianComponent> components;
    std::vector<double> weights;  // simplex
    std::size_t latent_dim = 0;

    std::size_t component_count() const { return components.size(); }
    void validate() const;
};

struct EmConfig {
    std::size_t max_iterations = 100;
    double tolerance = 1e-6;
    std::uint64_t seed = 0;
    double covariance_regularization = 1e-6;  // added to the diagonal each M-step
};

struct EmResult {
    MixturePrior prior;
    double log_likelihood = 0.0;
    std::vector<double> log_likelihood_history;  // one entry per iteration
    std::size_t iterations = 0;
    std::size_t reseeded_components = 0;  // degenerate components restarted
};

// EM fit with k-means++ seeding. The per-iteration log-likelihood is
// non-decreasing up to 1e-9 except across a degenerate-component reseed.
EmResult fit_em(const Matrix& points, std::size_t k, const EmConfig& config);

// Warm-started EM from explicit initial components and weights.
EmResult fit_em_from(const Matrix& points, MixturePrior init, const EmConfig& config);

struct PriorSample {
    Matrix values;  // n × p
    std::vector<std::size_t> assignments;
};

PriorSample sample_prior(const MixturePrior& prior, std::size_t n, RngState& rng);

// z = A·eps + mean for a single component; eps has shape n × p.
Matrix component_sample(const MixturePrior& prior, std::size_t component, const Matrix& eps);

// Reclusters with k_new extra components. New components start at the given
// means (typically the clusters spawned by the streaming estimator); old
// components warm-start from the previous fit.
EmResult refit_with_new_classes(const MixturePrior& prior, const Matrix& points,
                                std::size_t k_new, const std::vector<std::vector<double>>& new_means,
                                const EmConfig& config);

double mixture_log_likelihood(const MixturePrior& prior, const Matrix& points);

// Lower Cholesky of a symmetric positive definite matrix.
Matrix cholesky_lower(const Matrix& sym);

}  // namespace negm

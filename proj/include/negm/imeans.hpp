#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "negm/gmm.hpp"
#include "negm/matrix.hpp"
#include "negm/rng.hpp"

namespace negm {

// Running per-cluster statistics, updated by the streaming recurrences
//   mean += (x - mean) / i
//   m2   += (x - mean_old) ∘ (x - mean_new)
//   sigma = sqrt(m2 / (i - 1))        (zero vector while i < 2)
struct ClusterState {
    enum class Origin { known, spawned };

    std::vector<double> mean;
    std::vector<double> m2;
    std::vector<double> sigma;
    std::size_t count = 0;
    Origin origin = Origin::known;
};

void update_known(ClusterState& cluster, const double* x, std::size_t dim);

// Beta-Bernoulli evidence. The *_prior counts come from the three-sigma
// warm-up; the online counts accumulate with each decision.
struct BetaParams {
    std::int64_t alpha_prior = 0;
    std::int64_t beta_prior = 0;
    std::int64_t alpha = 0;
    std::int64_t beta = 0;
};

// theta = (alpha_prior + alpha) / (alpha_prior + alpha + beta_prior + beta).
double theta_map(const BetaParams& params);

struct IMeansConfig {
    std::size_t warmup_size = 200;  // WS: flagged instances consumed as warm-up
    // Literal pseudo-code branch direction (join on u <= theta). The default
    // follows the prose reading: spawn with probability theta.
    bool literal_branch = false;
    // Beta prior given to a freshly spawned cluster. alpha of zero makes
    // spawned clusters pure absorbers, which keeps the cluster count exact on
    // separated data; beta defaults to the rounded mean warm-up beta of the
    // known clusters.
    std::int64_t spawned_prior_alpha = 0;
    std::uint64_t seed = 0;
};

struct NearestCluster {
    double loss_min = 0.0;
    std::size_t index = 0;
};

struct Decision {
    enum class Kind { warmup, joined, spawned };
    Kind kind = Kind::joined;
    std::size_t cluster = 0;
};

struct BatchOutcome {
    std::size_t k_new_delta = 0;
    std::vector<Decision> decisions;
    std::vector<std::vector<double>> spawned_means;
};

class IMeansState {
public:
    static IMeansState from_labeled(const Matrix& latents, const std::vector<std::string>& labels,
                                    const std::vector<std::string>& class_names,
                                    const IMeansConfig& config);
    static IMeansState from_prior(const MixturePrior& prior,
                                  const std::vector<std::size_t>& component_counts,
                                  const IMeansConfig& config);

    NearestCluster nearest_cluster(const double* x) const;
    NearestCluster nearest_cluster(const std::vector<double>& x) const;

    // Three-sigma counting for one warm-up instance.
    void warmup_point(const double* x);
    // Counts a whole matrix of warm-up instances and closes the warm-up stage.
    void warmup(const Matrix& instances);

    // Bernoulli(theta) decision for one post-warm-up instance.
    Decision process_instance(const double* x);

    // Streams a batch of flagged points: instances are consumed by the
    // warm-up stage while it is open, then processed in row order.
    BatchOutcome run_batch(const Matrix& flagged);

    std::size_t dimension() const { return dim_; }
    std::size_t k0() const { return k0_; }
    std::size_t k_new() const { return k_new_; }
    std::size_t cluster_count() const { return clusters_.size(); }
    std::size_t warmup_remaining() const { return warmup_remaining_; }
    bool warmup_done() const { return warmup_remaining_ == 0; }
    const std::vector<ClusterState>& clusters() const { return clusters_; }
    const std::vector<BetaParams>& beta_params() const { return beta_; }
    std::size_t degenerate_sigma_events() const { return degenerate_sigma_events_; }
    std::size_t zero_evidence_fallbacks() const { return zero_evidence_fallbacks_; }

    std::string to_json() const;
    static IMeansState from_json(const std::string& json_text);

private:
    void close_warmup();

    std::vector<ClusterState> clusters_;
    std::vector<BetaParams> beta_;
    std::size_t dim_ = 0;
    std::size_t k0_ = 0;
    std::size_t k_new_ = 0;
    std::size_t warmup_remaining_ = 0;
    std::int64_t spawned_prior_beta_ = 1;
    IMeansConfig config_;
    RngState rng_{0};
    std::size_t degenerate_sigma_events_ = 0;
    std::size_t zero_evidence_fallbacks_ = 0;
};

}  // namespace negm

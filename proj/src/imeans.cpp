#include "negm/imeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "negm/error.hpp"

namespace negm {

void update_known(ClusterState& cluster, const double* x, std::size_t dim) {
    if (cluster.count < 1) fail(ErrorKind::usage, "update_known: cluster has no members");
    const std::size_t i = cluster.count + 1;
    for (std::size_t c = 0; c < dim; ++c) {
        const double old_mean = cluster.mean[c];
        const double new_mean = old_mean + (x[c] - old_mean) / static_cast<double>(i);
        cluster.mean[c] = new_mean;
        cluster.m2[c] += (x[c] - old_mean) * (x[c] - new_mean);
        cluster.sigma[c] = std::sqrt(cluster.m2[c] / static_cast<double>(i - 1));
    }
    cluster.count = i;
}

double theta_map(const BetaParams& params) {
    if (params.alpha_prior < 0 || params.beta_prior < 0 || params.alpha < 0 || params.beta < 0)
        fail(ErrorKind::usage, "theta_map: negative Beta counts");
    const std::int64_t denom =
        params.alpha_prior + params.alpha + params.beta_prior + params.beta;
    if (denom == 0)
        fail(ErrorKind::usage, "theta_map: all Beta counts are zero (warm-up required first)");
    return static_cast<double>(params.alpha_prior + params.alpha) / static_cast<double>(denom);
}

IMeansState IMeansState::from_labeled(const Matrix& latents,
                                      const std::vector<std::string>& labels,
                                      const std::vector<std::string>& class_names,
                                      const IMeansConfig& config) {
    if (class_names.empty()) fail(ErrorKind::usage, "imeans: empty class list");
    if (labels.size() != latents.rows)
        fail(ErrorKind::usage, "imeans: label count does not match latent rows");

    IMeansState state;
    state.dim_ = latents.cols;
    state.config_ = config;
    state.warmup_remaining_ = config.warmup_size;
    state.rng_ = RngState(config.seed);

    for (const std::string& cls : class_names) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < labels.size(); ++r)
            if (labels[r] == cls) rows.push_back(r);
        if (rows.empty())
            fail(ErrorKind::usage, "imeans: class '" + cls + "' has no instances");
        ClusterState cluster;
        cluster.origin = ClusterState::Origin::known;
        cluster.count = rows.size();
        cluster.mean.assign(state.dim_, 0.0);
        cluster.m2.assign(state.dim_, 0.0);
        cluster.sigma.assign(state.dim_, 0.0);
        for (std::size_t r : rows) {
            const double* x = latents.row_ptr(r);
            for (std::size_t c = 0; c < state.dim_; ++c) cluster.mean[c] += x[c];
        }
        for (double& v : cluster.mean) v /= static_cast<double>(rows.size());
        if (rows.size() >= 2) {
            for (std::size_t r : rows) {
                const double* x = latents.row_ptr(r);
                for (std::size_t c = 0; c < state.dim_; ++c) {
                    const double d = x[c] - cluster.mean[c];
                    cluster.m2[c] += d * d;
                }
            }
            for (std::size_t c = 0; c < state.dim_; ++c)
                cluster.sigma[c] =
                    std::sqrt(cluster.m2[c] / static_cast<double>(rows.size() - 1));
        } else {
            ++state.degenerate_sigma_events_;  // sigma stays zero with a warning tally
        }
        state.clusters_.push_back(std::move(cluster));
        state.beta_.push_back(BetaParams{});
    }
    state.k0_ = state.clusters_.size();
    return state;
}

IMeansState IMeansState::from_prior(const MixturePrior& prior,
                                    const std::vector<std::size_t>& component_counts,
                                    const IMeansConfig& config) {
    prior.validate();
    if (component_counts.size() != prior.component_count())
        fail(ErrorKind::usage, "imeans: counts do not match prior components");

    IMeansState state;
    state.dim_ = prior.latent_dim;
    state.config_ = config;
    state.warmup_remaining_ = config.warmup_size;
    state.rng_ = RngState(config.seed);

    for (std::size_t k = 0; k < prior.component_count(); ++k) {
        const GaussianComponent& comp = prior.components[k];
        ClusterState cluster;
        cluster.origin = ClusterState::Origin::known;
        cluster.count = std::max<std::size_t>(1, component_counts[k]);
        cluster.mean = comp.mean;
        cluster.sigma.assign(state.dim_, 0.0);
        cluster.m2.assign(state.dim_, 0.0);
        for (std::size_t i = 0; i < state.dim_; ++i) {
            // diagonal of A·Aᵀ is the squared norm of row i of the factor
            double v = 0.0;
            for (std::size_t j = 0; j <= i; ++j) v += comp.factor(i, j) * comp.factor(i, j);
            cluster.sigma[i] = std::sqrt(v);
            cluster.m2[i] = v * static_cast<double>(cluster.count > 1 ? cluster.count - 1 : 0);
        }
        state.clusters_.push_back(std::move(cluster));
        state.beta_.push_back(BetaParams{});
    }
    state.k0_ = state.clusters_.size();
    return state;
}

NearestCluster IMeansState::nearest_cluster(const double* x) const {
    if (clusters_.empty()) fail(ErrorKind::usage, "imeans: no clusters");
    NearestCluster best;
    best.loss_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < clusters_.size(); ++k) {
        const double d = std::sqrt(squared_distance(x, clusters_[k].mean.data(), dim_));
        if (d < best.loss_min) {  // strict: lowest index wins ties
            best.loss_min = d;
            best.index = k;
        }
    }
    return best;
}

NearestCluster IMeansState::nearest_cluster(const std::vector<double>& x) const {
    if (x.size() != dim_) fail(ErrorKind::usage, "imeans: point dimension mismatch");
    return nearest_cluster(x.data());
}

void IMeansState::warmup_point(const double* x) {
    const NearestCluster near = nearest_cluster(x);
    const ClusterState& cluster = clusters_[near.index];
    const double sigma_norm = euclidean_norm(cluster.sigma.data(), dim_);
    bool outlier;
    if (sigma_norm == 0.0) {
        // Degenerate spread: anything off the mean counts as an outlier.
        outlier = near.loss_min > 0.0;
        ++degenerate_sigma_events_;
    } else {
        outlier = near.loss_min > 3.0 * sigma_norm;
    }
    if (outlier)
        ++beta_[near.index].alpha_prior;
    else
        ++beta_[near.index].beta_prior;
}

void IMeansState::warmup(const Matrix& instances) {
    if (instances.rows == 0) fail(ErrorKind::usage, "imeans: empty warm-up set");
    if (instances.cols != dim_) fail(ErrorKind::usage, "imeans: warm-up dimension mismatch");
    for (std::size_t r = 0; r < instances.rows; ++r) warmup_point(instances.row_ptr(r));
    warmup_remaining_ = 0;
    close_warmup();
}

void IMeansState::close_warmup() {
    // Spawned clusters inherit a beta prior comparable to the knowns so they
    // absorb their neighborhoods.
    double total = 0.0;
    std::size_t known = 0;
    for (std::size_t k = 0; k < k0_; ++k) {
        total += static_cast<double>(beta_[k].beta_prior);
        ++known;
    }
    spawned_prior_beta_ = known ? std::llround(total / static_cast<double>(known)) : 1;
    if (spawned_prior_beta_ < 1) spawned_prior_beta_ = 1;
}

Decision IMeansState::process_instance(const double* x) {
    if (warmup_remaining_ > 0)
        fail(ErrorKind::usage, "imeans: warm-up not finished; " +
                                   std::to_string(warmup_remaining_) + " instances pending");
    for (std::size_t c = 0; c < dim_; ++c)
        if (!std::isfinite(x[c])) fail(ErrorKind::usage, "imeans: non-finite instance rejected");

    const NearestCluster near = nearest_cluster(x);
    BetaParams& evidence = beta_[near.index];
    double theta;
    const std::int64_t denom =
        evidence.alpha_prior + evidence.alpha + evidence.beta_prior + evidence.beta;
    if (denom == 0) {
        // No warm-up evidence ever reached this cluster; treat it as settled.
        theta = 0.0;
        ++zero_evidence_fallbacks_;
    } else {
        theta = theta_map(evidence);
    }

    const double u = rng_.uniform();
    const bool spawn = config_.literal_branch ? (u > theta) : (u < theta);

    Decision decision;
    if (spawn) {
        ++evidence.alpha;
        ClusterState fresh;
        fresh.origin = ClusterState::Origin::spawned;
        fresh.count = 1;
        fresh.mean.assign(x, x + dim_);
        fresh.m2.assign(dim_, 0.0);
        fresh.sigma.assign(dim_, 0.0);  // zero spread until a second member arrives
        clusters_.push_back(std::move(fresh));
        BetaParams fresh_beta;
        fresh_beta.alpha_prior = config_.spawned_prior_alpha;
        fresh_beta.beta_prior = spawned_prior_beta_;
        beta_.push_back(fresh_beta);
        ++k_new_;
        decision.kind = Decision::Kind::spawned;
        decision.cluster = clusters_.size() - 1;
    } else {
        update_known(clusters_[near.index], x, dim_);
        ++evidence.beta;
        decision.kind = Decision::Kind::joined;
        decision.cluster = near.index;
    }
    return decision;
}

BatchOutcome IMeansState::run_batch(const Matrix& flagged) {
    if (flagged.rows > 0 && flagged.cols != dim_)
        fail(ErrorKind::usage, "imeans: batch dimension mismatch");
    BatchOutcome outcome;
    outcome.decisions.reserve(flagged.rows);
    for (std::size_t r = 0; r < flagged.rows; ++r) {
        const double* x = flagged.row_ptr(r);
        if (warmup_remaining_ > 0) {
            warmup_point(x);
            if (--warmup_remaining_ == 0) close_warmup();
            outcome.decisions.push_back({Decision::Kind::warmup, 0});
            continue;
        }
        const Decision d = process_instance(x);
        outcome.decisions.push_back(d);
        if (d.kind == Decision::Kind::spawned) {
            ++outcome.k_new_delta;
            outcome.spawned_means.push_back(clusters_[d.cluster].mean);
        }
    }
    return outcome;
}

std::string IMeansState::to_json() const {
    nlohmann::json j;
    j["dimension"] = dim_;
    j["k0"] = k0_;
    j["k_new"] = k_new_;
    j["warmup_remaining"] = warmup_remaining_;
    j["spawned_prior_beta"] = spawned_prior_beta_;
    j["degenerate_sigma_events"] = degenerate_sigma_events_;
    j["zero_evidence_fallbacks"] = zero_evidence_fallbacks_;
    j["config"] = {{"warmup_size", config_.warmup_size},
                   {"literal_branch", config_.literal_branch},
                   {"spawned_prior_alpha", config_.spawned_prior_alpha},
                   {"seed", config_.seed}};
    j["rng_state"] = rng_.state_string();
    nlohmann::json clusters = nlohmann::json::array();
    for (std::size_t k = 0; k < clusters_.size(); ++k) {
        const ClusterState& c = clusters_[k];
        clusters.push_back({{"mean", c.mean},
                            {"m2", c.m2},
                            {"sigma", c.sigma},
                            {"count", c.count},
                            {"origin", c.origin == ClusterState::Origin::known ? "known" : "spawned"},
                            {"alpha_prior", beta_[k].alpha_prior},
                            {"beta_prior", beta_[k].beta_prior},
                            {"alpha", beta_[k].alpha},
                            {"beta", beta_[k].beta}});
    }
    j["clusters"] = std::move(clusters);
    return j.dump();
}

IMeansState IMeansState::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::usage, std::string("imeans snapshot: invalid json: ") + e.what());
    }
    IMeansState state;
    try {
        state.dim_ = j.at("dimension").get<std::size_t>();
        state.k0_ = j.at("k0").get<std::size_t>();
        state.k_new_ = j.at("k_new").get<std::size_t>();
        state.warmup_remaining_ = j.at("warmup_remaining").get<std::size_t>();
        state.spawned_prior_beta_ = j.at("spawned_prior_beta").get<std::int64_t>();
        state.degenerate_sigma_events_ = j.at("degenerate_sigma_events").get<std::size_t>();
        state.zero_evidence_fallbacks_ = j.at("zero_evidence_fallbacks").get<std::size_t>();
        const auto& jc = j.at("config");
        state.config_.warmup_size = jc.at("warmup_size").get<std::size_t>();
        state.config_.literal_branch = jc.at("literal_branch").get<bool>();
        state.config_.spawned_prior_alpha = jc.at("spawned_prior_alpha").get<std::int64_t>();
        state.config_.seed = jc.at("seed").get<std::uint64_t>();
        state.rng_ = RngState(state.config_.seed);
        state.rng_.restore_state(j.at("rng_state").get<std::string>());
        for (const auto& c : j.at("clusters")) {
            ClusterState cluster;
            cluster.mean = c.at("mean").get<std::vector<double>>();
            cluster.m2 = c.at("m2").get<std::vector<double>>();
            cluster.sigma = c.at("sigma").get<std::vector<double>>();
            cluster.count = c.at("count").get<std::size_t>();
            cluster.origin = c.at("origin").get<std::string>() == "known"
                                 ? ClusterState::Origin::known
                                 : ClusterState::Origin::spawned;
            state.clusters_.push_back(std::move(cluster));
            BetaParams b;
            b.alpha_prior = c.at("alpha_prior").get<std::int64_t>();
            b.beta_prior = c.at("beta_prior").get<std::int64_t>();
            b.alpha = c.at("alpha").get<std::int64_t>();
            b.beta = c.at("beta").get<std::int64_t>();
            state.beta_.push_back(b);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::usage, std::string("imeans snapshot: missing field: ") + e.what());
    }
    if (state.clusters_.size() != state.k0_ + state.k_new_)
        fail(ErrorKind::usage, "imeans snapshot: cluster count does not equal k0 + k_new");
    return state;
}

}  // namespace negm

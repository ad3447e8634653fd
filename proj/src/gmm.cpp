#include "negm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "negm/error.hpp"

namespace negm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

Matrix GaussianComponent::covariance() const {
    return matmul_nt(factor, factor);
}

void MixturePrior::validate() const {
    if (components.empty()) fail(ErrorKind::usage, "mixture prior needs at least one component");
    if (weights.size() != components.size())
        fail(ErrorKind::usage, "mixture prior weight/component count mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) fail(ErrorKind::usage, "mixture prior has a negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        fail(ErrorKind::usage, "mixture prior weights sum to " + std::to_string(sum));
    for (const GaussianComponent& c : components) {
        if (c.mean.size() != latent_dim || c.factor.rows != latent_dim ||
            c.factor.cols != latent_dim)
            fail(ErrorKind::usage, "mixture prior component dimensions inconsistent");
    }
}

Matrix cholesky_lower(const Matrix& sym) {
    if (sym.rows != sym.cols) fail(ErrorKind::usage, "cholesky: matrix is not square");
    const std::size_t n = sym.rows;
    Matrix lower(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = sym(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
            if (i == j) {
                if (s <= 0.0)
                    fail(ErrorKind::train, "cholesky: matrix is not positive definite");
                lower(i, i) = std::sqrt(s);
            } else {
                lower(i, j) = s / lower(j, j);
            }
        }
    }
    return lower;
}

namespace {

// log N(x; mean, L·Lᵀ) for every row of points, appended into out (n × K).
void component_log_pdf(const Matrix& points, const GaussianComponent& comp, std::size_t index,
                       Matrix& out) {
    const std::size_t p = comp.mean.size();
    double log_det = 0.0;
    for (std::size_t i = 0; i < p; ++i) log_det += std::log(comp.factor(i, i));
    std::vector<double> y(p);
    for (std::size_t r = 0; r < points.rows; ++r) {
        const double* x = points.row_ptr(r);
        // forward substitution: L y = x - mean
        double quad = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            double s = x[i] - comp.mean[i];
            for (std::size_t k = 0; k < i; ++k) s -= comp.factor(i, k) * y[k];
            y[i] = s / comp.factor(i, i);
            quad += y[i] * y[i];
        }
        out(r, index) = -0.5 * (static_cast<double>(p) * kLog2Pi + quad) - log_det;
    }
}

struct EStep {
    Matrix responsibilities;  // n × K
    double log_likelihood = 0.0;
};

EStep e_step(const MixturePrior& prior, const Matrix& points) {
    const std::size_t n = points.rows;
    const std::size_t k = prior.component_count();
    EStep e;
    e.responsibilities = Matrix(n, k);
    Matrix& lp = e.responsibilities;  // reused in place: log joint, then resp
    for (std::size_t c = 0; c < k; ++c) component_log_pdf(points, prior.components[c], c, lp);
    for (std::size_t c = 0; c < k; ++c) {
        const double lw = prior.weights[c] > 0.0 ? std::log(prior.weights[c])
                                                 : -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < n; ++r) lp(r, c) += lw;
    }
    for (std::size_t r = 0; r < n; ++r) {
        double* row = lp.row_ptr(r);
        double m = row[0];
        for (std::size_t c = 1; c < k; ++c) m = std::max(m, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) sum += std::exp(row[c] - m);
        const double lse = m + std::log(sum);
        e.log_likelihood += lse;
        for (std::size_t c = 0; c < k; ++c) row[c] = std::exp(row[c] - lse);
    }
    return e;
}

Matrix global_covariance(const Matrix& points, double reg) {
    const std::size_t p = points.cols;
    std::vector<double> mean = column_mean(points);
    Matrix cov(p, p);
    for (std::size_t r = 0; r < points.rows; ++r) {
        const double* x = points.row_ptr(r);
        for (std::size_t i = 0; i < p; ++i) {
            const double di = x[i] - mean[i];
            for (std::size_t j = 0; j <= i; ++j) cov(i, j) += di * (x[j] - mean[j]);
        }
    }
    const double denom = std::max<double>(1.0, static_cast<double>(points.rows));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cov(i, j) /= denom;
            cov(j, i) = cov(i, j);
        }
    for (std::size_t i = 0; i < p; ++i) cov(i, i) += reg;
    return cov;
}

// k-means++ seeding followed by a few Lloyd sweeps; returns hard assignments.
std::vector<std::size_t> kmeans_assignments(const Matrix& points, std::size_t k, RngState& rng) {
    const std::size_t n = points.rows;
    const std::size_t p = points.cols;
    std::vector<std::vector<double>> centers;
    centers.reserve(k);
    std::vector<double> d2(n);
    const std::size_t first = rng.uniform_index(n);
    centers.emplace_back(points.row_ptr(first), points.row_ptr(first) + p);
    for (std::size_t r = 0; r < n; ++r)
        d2[r] = squared_distance(points.row_ptr(r), centers[0].data(), p);
    while (centers.size() < k) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                acc += d2[r];
                if (acc >= target) {
                    pick = r;
                    break;
                }
            }
        } else {
            pick = rng.uniform_index(n);
        }
        centers.emplace_back(points.row_ptr(pick), points.row_ptr(pick) + p);
        for (std::size_t r = 0; r < n; ++r)
            d2[r] = std::min(d2[r],
                             squared_distance(points.row_ptr(r), centers.back().data(), p));
    }

    std::vector<std::size_t> assign(n, 0);
    for (std::size_t iter = 0; iter < 10; ++iter) {
        bool changed = false;
        for (std::size_t r = 0; r < n; ++r) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double dist = squared_distance(points.row_ptr(r), centers[c].data(), p);
                if (dist < best) {
                    best = dist;
                    best_c = c;
                }
            }
            if (assign[r] != best_c) {
                assign[r] = best_c;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
        std::vector<std::size_t> counts(k, 0);
        for (auto& c : centers) std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            ++counts[assign[r]];
            const double* x = points.row_ptr(r);
            for (std::size_t i = 0; i < p; ++i) centers[assign[r]][i] += x[i];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                const std::size_t pick = rng.uniform_index(n);
                centers[c].assign(points.row_ptr(pick), points.row_ptr(pick) + p);
            } else {
                for (double& v : centers[c]) v /= static_cast<double>(counts[c]);
            }
        }
    }
    return assign;
}

GaussianComponent component_from_moments(const std::vector<double>& mean, Matrix cov,
                                         double reg) {
    for (std::size_t i = 0; i < cov.rows; ++i) cov(i, i) += reg;
    GaussianComponent comp;
    comp.mean = mean;
    comp.factor = cholesky_lower(cov);
    return comp;
}

EmResult run_em(const Matrix& points, MixturePrior prior, const EmConfig& config,
                RngState& rng) {
    const std::size_t n = points.rows;
    const std::size_t p = points.cols;
    const std::size_t k = prior.component_count();
    const Matrix fallback_cov = global_covariance(points, config.covariance_regularization);

    EmResult result;
    double previous_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < config.max_iterations; ++iter) {
        EStep e = e_step(prior, points);
        result.log_likelihood_history.push_back(e.log_likelihood);
        result.iterations = iter + 1;

        // M-step
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0;
            for (std::size_t r = 0; r < n; ++r) nk += e.responsibilities(r, c);
            if (nk < 2.0) {
                // Degenerate component: restart it on a random data point with
                // the global covariance.
                const std::size_t pick = rng.uniform_index(n);
                prior.components[c].mean.assign(points.row_ptr(pick), points.row_ptr(pick) + p);
                prior.components[c].factor = cholesky_lower(fallback_cov);
                prior.weights[c] = 1.0 / static_cast<double>(n);
                ++result.reseeded_components;
                continue;
            }
            std::vector<double> mean(p, 0.0);
            for (std::size_t r = 0; r < n; ++r) {
                const double resp = e.responsibilities(r, c);
                const double* x = points.row_ptr(r);
                for (std::size_t i = 0; i < p; ++i) mean[i] += resp * x[i];
            }
            for (double& v : mean) v /= nk;
            Matrix cov(p, p);
            for (std::size_t r = 0; r < n; ++r) {
                const double resp = e.responsibilities(r, c);
                if (resp == 0.0) continue;
                const double* x = points.row_ptr(r);
                for (std::size_t i = 0; i < p; ++i) {
                    const double di = x[i] - mean[i];
                    for (std::size_t j = 0; j <= i; ++j) cov(i, j) += resp * di * (x[j] - mean[j]);
                }
            }
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j <= i; ++j) {
                    cov(i, j) /= nk;
                    cov(j, i) = cov(i, j);
                }
            for (std::size_t i = 0; i < p; ++i) cov(i, i) += config.covariance_regularization;
            prior.components[c].mean = std::move(mean);
            prior.components[c].factor = cholesky_lower(cov);
            prior.weights[c] = nk / static_cast<double>(n);
        }
        double wsum = 0.0;
        for (double w : prior.weights) wsum += w;
        for (double& w : prior.weights) w /= wsum;

        if (iter > 0 && std::abs(e.log_likelihood - previous_ll) < config.tolerance) break;
        previous_ll = e.log_likelihood;
    }
    result.log_likelihood = mixture_log_likelihood(prior, points);
    result.prior = std::move(prior);
    return result;
}

}  // namespace

double mixture_log_likelihood(const MixturePrior& prior, const Matrix& points) {
    return e_step(prior, points).log_likelihood;
}

EmResult fit_em(const Matrix& points, std::size_t k, const EmConfig& config) {
    if (k < 1) fail(ErrorKind::usage, "fit_em: need at least one component");
    if (points.rows < k)
        fail(ErrorKind::usage, "fit_em: " + std::to_string(points.rows) + " points for " +
                                   std::to_string(k) + " components");
    if (points.cols < 1) fail(ErrorKind::usage, "fit_em: latent dimension must be >= 1");

    RngState rng(config.seed);
    const std::size_t p = points.cols;
    const std::vector<std::size_t> assign = kmeans_assignments(points, k, rng);
    const Matrix fallback_cov = global_covariance(points, config.covariance_regularization);

    MixturePrior init;
    init.latent_dim = p;
    init.weights.assign(k, 0.0);
    init.components.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t r = 0; r < points.rows; ++r)
            if (assign[r] == c) members.push_back(r);
        init.weights[c] = std::max<double>(1.0, static_cast<double>(members.size())) /
                          static_cast<double>(points.rows);
        if (members.size() < 2) {
            const std::size_t pick = members.empty() ? rng.uniform_index(points.rows) : members[0];
            init.components[c].mean.assign(points.row_ptr(pick), points.row_ptr(pick) + p);
            init.components[c].factor = cholesky_lower(fallback_cov);
            continue;
        }
        const Matrix sub = take_rows(points, members);
        std::vector<double> mean = column_mean(sub);
        Matrix cov(p, p);
        for (std::size_t r = 0; r < sub.rows; ++r) {
            const double* x = sub.row_ptr(r);
            for (std::size_t i = 0; i < p; ++i) {
                const double di = x[i] - mean[i];
                for (std::size_t j = 0; j <= i; ++j) cov(i, j) += di * (x[j] - mean[j]);
            }
        }
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                cov(i, j) /= static_cast<double>(sub.rows);
                cov(j, i) = cov(i, j);
            }
        init.components[c] = component_from_moments(mean, std::move(cov),
                                                    config.covariance_regularization);
    }
    double wsum = 0.0;
    for (double w : init.weights) wsum += w;
    for (double& w : init.weights) w /= wsum;

    return run_em(points, std::move(init), config, rng);
}

EmResult fit_em_from(const Matrix& points, MixturePrior init, const EmConfig& config) {
    init.validate();
    if (init.latent_dim != points.cols)
        fail(ErrorKind::usage, "fit_em_from: latent dimension mismatch");
    RngState rng(config.seed);
    return run_em(points, std::move(init), config, rng);
}

PriorSample sample_prior(const MixturePrior& prior, std::size_t n, RngState& rng) {
    prior.validate();
    if (n < 1) fail(ErrorKind::usage, "sample_prior: n must be >= 1");
    const std::size_t p = prior.latent_dim;
    PriorSample out;
    out.values = Matrix(n, p);
    out.assignments.resize(n);
    std::vector<double> eps(p);
    for (std::size_t r = 0; r < n; ++r) {
        const double u = rng.uniform();
        std::size_t comp = prior.component_count() - 1;
        double acc = 0.0;
        for (std::size_t c = 0; c < prior.component_count(); ++c) {
            acc += prior.weights[c];
            if (u < acc) {
                comp = c;
                break;
            }
        }
        out.assignments[r] = comp;
        for (double& e : eps) e = rng.normal();
        const GaussianComponent& g = prior.components[comp];
        double* z = out.values.row_ptr(r);
        for (std::size_t i = 0; i < p; ++i) {
            double s = g.mean[i];
            for (std::size_t k = 0; k <= i; ++k) s += g.factor(i, k) * eps[k];
            z[i] = s;
        }
    }
    return out;
}

Matrix component_sample(const MixturePrior& prior, std::size_t component, const Matrix& eps) {
    prior.validate();
    if (component >= prior.component_count())
        fail(ErrorKind::usage, "component_sample: component index out of range");
    if (eps.cols != prior.latent_dim)
        fail(ErrorKind::usage, "component_sample: eps width mismatch");
    const GaussianComponent& g = prior.components[component];
    const std::size_t p = prior.latent_dim;
    Matrix out(eps.rows, p);
    for (std::size_t r = 0; r < eps.rows; ++r) {
        const double* e = eps.row_ptr(r);
        double* z = out.row_ptr(r);
        for (std::size_t i = 0; i < p; ++i) {
            double s = g.mean[i];
            for (std::size_t k = 0; k <= i; ++k) s += g.factor(i, k) * e[k];
            z[i] = s;
        }
    }
    return out;
}

EmResult refit_with_new_classes(const MixturePrior& prior, const Matrix& points,
                                std::size_t k_new,
                                const std::vector<std::vector<double>>& new_means,
                                const EmConfig& config) {
    prior.validate();
    if (new_means.size() < k_new)
        fail(ErrorKind::usage, "refit_with_new_classes: need a seed mean per new component");
    const std::size_t k_old = prior.component_count();
    const std::size_t p = prior.latent_dim;

    MixturePrior init = prior;
    if (k_new > 0) {
        // New components start at the spawned means with the average existing
        // covariance and a deliberately small weight: a freshly emerged class
        // holds a handful of points, and an oversized starting weight lets it
        // swallow neighbouring known clusters before EM settles.
        Matrix avg_cov(p, p);
        for (const GaussianComponent& c : prior.components) {
            const Matrix cov = c.covariance();
            for (std::size_t i = 0; i < cov.values.size(); ++i) avg_cov.values[i] += cov.values[i];
        }
        for (double& v : avg_cov.values) v /= static_cast<double>(k_old);
        const double new_weight =
            std::max(1.0 / static_cast<double>(points.rows > 0 ? points.rows : 1),
                     0.01 / static_cast<double>(k_old + k_new));
        for (std::size_t j = 0; j < k_new; ++j) {
            if (new_means[j].size() != p)
                fail(ErrorKind::usage, "refit_with_new_classes: seed mean dimension mismatch");
            init.components.push_back(component_from_moments(
                new_means[j], avg_cov, config.covariance_regularization));
            init.weights.push_back(new_weight);
        }
        double wsum = 0.0;
        for (double w : init.weights) wsum += w;
        for (double& w : init.weights) w /= wsum;
    }
    return fit_em_from(points, std::move(init), config);
}

}  // namespace negm

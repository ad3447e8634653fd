#include <doctest.h>

#include <cmath>

#include "negm/error.hpp"
#include "negm/imeans.hpp"
#include "negm/net.hpp"

using namespace negm;

namespace {

// Labeled latent blobs: one Gaussian cluster per class name.
struct Labeled {
    Matrix latents;
    std::vector<std::string> labels;
    std::vector<std::string> class_names;
};

Labeled make_blobs(const std::vector<std::vector<double>>& centers, std::size_t per,
                   double sigma, RngState& rng) {
    const std::size_t dim = centers[0].size();
    Labeled out;
    out.latents = Matrix(centers.size() * per, dim);
    std::size_t r = 0;
    for (std::size_t b = 0; b < centers.size(); ++b) {
        const std::string name = "class_" + std::to_string(b);
        out.class_names.push_back(name);
        for (std::size_t i = 0; i < per; ++i, ++r) {
            for (std::size_t c = 0; c < dim; ++c)
                out.latents(r, c) = centers[b][c] + sigma * rng.normal();
            out.labels.push_back(name);
        }
    }
    return out;
}

IMeansConfig quick_config(std::size_t ws = 0, std::uint64_t seed = 5) {
    IMeansConfig cfg;
    cfg.warmup_size = ws;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("from_labeled: one cluster per class with matching statistics") {
    RngState rng(3);
    const Labeled data = make_blobs({{0, 0}, {10, 0}, {0, 10}, {10, 10},
                                     {20, 0}, {0, 20}, {20, 20}, {30, 0}},
                                    40, 1.0, rng);
    const IMeansState state =
        IMeansState::from_labeled(data.latents, data.labels, data.class_names, quick_config());
    CHECK(state.cluster_count() == 8);
    CHECK(state.k0() == 8);
    CHECK(state.k_new() == 0);

    // cluster means equal per-class means exactly
    for (std::size_t k = 0; k < 8; ++k) {
        std::vector<double> mean(2, 0.0);
        std::size_t count = 0;
        for (std::size_t r = 0; r < data.labels.size(); ++r) {
            if (data.labels[r] != data.class_names[k]) continue;
            mean[0] += data.latents(r, 0);
            mean[1] += data.latents(r, 1);
            ++count;
        }
        for (double& v : mean) v /= static_cast<double>(count);
        CHECK(state.clusters()[k].mean[0] == doctest::Approx(mean[0]).epsilon(1e-12));
        CHECK(state.clusters()[k].mean[1] == doctest::Approx(mean[1]).epsilon(1e-12));
        CHECK(state.clusters()[k].count == count);
    }
}

TEST_CASE("from_labeled: empty class list is rejected") {
    CHECK_THROWS_AS(IMeansState::from_labeled(Matrix(0, 2), {}, {}, quick_config()), Error);
}

TEST_CASE("nearest_cluster: exact hits, interior points, tie break") {
    RngState rng(4);
    Labeled data = make_blobs({{0.0}, {10.0}}, 10, 0.01, rng);
    IMeansState state =
        IMeansState::from_labeled(data.latents, data.labels, data.class_names, quick_config());

    const std::vector<double> at_mean = state.clusters()[1].mean;
    const NearestCluster hit = state.nearest_cluster(at_mean);
    CHECK(hit.index == 1);
    CHECK(hit.loss_min == doctest::Approx(0.0));

    const std::vector<double> x{4.0};
    const NearestCluster near0 = state.nearest_cluster(x);
    CHECK(near0.index == 0);
    CHECK(near0.loss_min == doctest::Approx(std::abs(4.0 - state.clusters()[0].mean[0])));

    // equidistant point: lowest index wins
    const double mid = 0.5 * (state.clusters()[0].mean[0] + state.clusters()[1].mean[0]);
    CHECK(state.nearest_cluster(std::vector<double>{mid}).index == 0);
}

TEST_CASE("warmup: point at the mean counts to beta, far point to alpha") {
    RngState rng(6);
    Labeled data = make_blobs({{0, 0}, {20, 20}}, 50, 1.0, rng);
    IMeansState state =
        IMeansState::from_labeled(data.latents, data.labels, data.class_names, quick_config(3));

    Matrix warm(3, 2);
    warm(0, 0) = state.clusters()[0].mean[0];
    warm(0, 1) = state.clusters()[0].mean[1];  // dead centre -> beta
    warm(1, 0) = 10.0;
    warm(1, 1) = 10.0;  // ~14 units from either mean, sigma_norm ~ 1.4 -> alpha
    warm(2, 0) = 20.3;
    warm(2, 1) = 19.8;  // inside cluster 1 -> beta
    state.warmup(warm);

    CHECK(state.beta_params()[0].beta_prior >= 1);
    CHECK(state.beta_params()[0].alpha_prior + state.beta_params()[1].alpha_prior == 1);
    CHECK(state.beta_params()[0].alpha_prior + state.beta_params()[0].beta_prior +
              state.beta_params()[1].alpha_prior + state.beta_params()[1].beta_prior ==
          3);  // each warm-up point contributes exactly one count
    CHECK(state.warmup_done());
}

TEST_CASE("warmup: gaussian cluster keeps at least 99% beta mass") {
    RngState rng(8);
    Labeled data = make_blobs({{0, 0, 0, 0}}, 500, 1.0, rng);
    IMeansState state =
        IMeansState::from_labeled(data.latents, data.labels, data.class_names,
                                  quick_config(10000));
    const Matrix warm = sample_standard_normal(rng, 10000, 4);
    state.warmup(warm);
    const BetaParams& b = state.beta_params()[0];
    const double beta_mass = static_cast<double>(b.beta_prior) /
                             static_cast<double>(b.alpha_prior + b.beta_prior);
    CHECK(beta_mass >= 0.99);
}

TEST_CASE("theta_map: closed form, error case, monotonicity") {
    CHECK(theta_map({1, 9, 0, 0}) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK_THROWS_WITH_AS(theta_map({0, 0, 0, 0}), doctest::Contains("warm-up"), Error);

    double previous = 0.0;
    for (std::int64_t alpha = 0; alpha < 2000; alpha += 50) {
        const double t = theta_map({3, 7, alpha, 5});
        CHECK(t >= previous);
        previous = t;
    }
    CHECK(previous > 0.99);  // theta -> 1 as alpha grows
}

TEST_CASE("theta_map: matches exact integer arithmetic on random counts") {
    RngState rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        BetaParams p;
        p.alpha_prior = static_cast<std::int64_t>(rng.uniform_index(1000));
        p.beta_prior = static_cast<std::int64_t>(rng.uniform_index(1000));
        p.alpha = static_cast<std::int64_t>(rng.uniform_index(100000));
        p.beta = static_cast<std::int64_t>(rng.uniform_index(100000));
        const std::int64_t num = p.alpha_prior + p.alpha;
        const std::int64_t den = num + p.beta_prior + p.beta;
        if (den == 0) continue;
        // cross-multiplied equality in exact 128-bit integers
        const double t = theta_map(p);
        const long double exact = static_cast<long double>(num) / static_cast<long double>(den);
        CHECK(std::abs(static_cast<long double>(t) - exact) <= 1e-18L * den);
        if (num > 0) {
            const __int128 lhs = static_cast<__int128>(num);
            const __int128 rhs = static_cast<__int128>(den);
            CHECK(static_cast<double>(lhs) / static_cast<double>(rhs) == t);
        }
    }
}

TEST_CASE("update_known: Welford recurrences against batch oracles") {
    SUBCASE("count 1, mean 0, new x = 2 gives mean 1") {
        ClusterState c;
        c.mean = {0.0};
        c.m2 = {0.0};
        c.sigma = {0.0};
        c.count = 1;
        const double x = 2.0;
        update_known(c, &x, 1);
        CHECK(c.mean[0] == doctest::Approx(1.0));
        CHECK(c.count == 2);
    }
    SUBCASE("streaming equals batch mean and sample sigma") {
        RngState rng(14);
        const std::size_t n = 400, dim = 3;
        Matrix xs = sample_standard_normal(rng, n, dim);
        for (std::size_t r = 0; r < n; ++r) xs(r, 1) = xs(r, 1) * 4.0 + 7.0;

        ClusterState c;
        c.mean.assign(xs.row_ptr(0), xs.row_ptr(0) + dim);
        c.m2.assign(dim, 0.0);
        c.sigma.assign(dim, 0.0);
        c.count = 1;
        for (std::size_t r = 1; r < n; ++r) update_known(c, xs.row_ptr(r), dim);

        const std::vector<double> mean = column_mean(xs);
        const std::vector<double> var = column_variance(xs, mean, 1);
        for (std::size_t d = 0; d < dim; ++d) {
            CHECK(c.mean[d] == doctest::Approx(mean[d]).epsilon(1e-10));
            CHECK(c.sigma[d] == doctest::Approx(std::sqrt(var[d])).epsilon(1e-10));
        }
    }
}

TEST_CASE("process_instance: degenerate thetas pin the branch") {
    RngState rng(19);
    Labeled data = make_blobs({{0, 0}, {30, 30}}, 30, 1.0, rng);

    SUBCASE("theta 0 everywhere joins; equals the nearest-mean oracle") {
        IMeansState state = IMeansState::from_labeled(data.latents, data.labels,
                                                      data.class_names, quick_config(2));
        Matrix warm(2, 2);
        warm(0, 0) = 0.1; warm(0, 1) = -0.1;   // near cluster 0 -> beta
        warm(1, 0) = 30.2; warm(1, 1) = 29.9;  // near cluster 1 -> beta
        state.warmup(warm);                    // alpha = 0 -> theta = 0

        IMeansState oracle = state;  // nearest-mean-only reference
        const Matrix stream = sample_standard_normal(rng, 60, 2);
        for (std::size_t r = 0; r < stream.rows; ++r) {
            const Decision d = state.process_instance(stream.row_ptr(r));
            CHECK(d.kind == Decision::Kind::joined);
            CHECK(d.cluster == oracle.nearest_cluster(stream.row_ptr(r)).index);
            update_known(const_cast<ClusterState&>(oracle.clusters()[d.cluster]),
                         stream.row_ptr(r), 2);
        }
        CHECK(state.k_new() == 0);
    }

    SUBCASE("theta 1 spawns every instance") {
        IMeansConfig cfg = quick_config(2);
        // Give spawned clusters overwhelming alpha evidence too, so theta
        // stays pinned at ~1 wherever an instance lands.
        cfg.spawned_prior_alpha = 1000000000;
        IMeansState state = IMeansState::from_labeled(data.latents, data.labels,
                                                      data.class_names, cfg);
        Matrix warm(2, 2);
        warm(0, 0) = 100.0; warm(0, 1) = 100.0;  // far -> alpha
        warm(1, 0) = -90.0; warm(1, 1) = 80.0;   // far -> alpha
        state.warmup(warm);                      // beta = 0 -> theta = 1 at both knowns

        std::size_t spawned = 0;
        for (int i = 0; i < 10; ++i) {
            std::vector<double> x{200.0 + 40.0 * i, -100.0 - 30.0 * i};
            const Decision d = state.process_instance(x.data());
            spawned += d.kind == Decision::Kind::spawned;
        }
        CHECK(spawned == 10);
        CHECK(state.k_new() == 10);
        CHECK(state.cluster_count() == 2 + 10);
    }
}

TEST_CASE("process_instance: spawned cluster starts at the instance with zero sigma") {
    RngState rng(21);
    Labeled data = make_blobs({{0, 0}}, 30, 1.0, rng);
    IMeansState state = IMeansState::from_labeled(data.latents, data.labels, data.class_names,
                                                  quick_config(1));
    Matrix warm(1, 2);
    warm(0, 0) = 50.0; warm(0, 1) = 50.0;  // outlier -> theta = 1
    state.warmup(warm);

    const std::vector<double> x{42.5, -13.25};
    const Decision d = state.process_instance(x.data());
    REQUIRE(d.kind == Decision::Kind::spawned);
    const ClusterState& fresh = state.clusters()[d.cluster];
    CHECK(fresh.mean == x);
    CHECK(fresh.sigma == std::vector<double>{0.0, 0.0});
    CHECK(fresh.count == 1);
    CHECK(fresh.origin == ClusterState::Origin::spawned);
}

TEST_CASE("process_instance: literal branch direction flips the decision") {
    RngState rng(23);
    Labeled data = make_blobs({{0, 0}}, 30, 1.0, rng);
    IMeansConfig cfg = quick_config(1);
    cfg.literal_branch = true;
    IMeansState state =
        IMeansState::from_labeled(data.latents, data.labels, data.class_names, cfg);
    Matrix warm(1, 2);
    warm(0, 0) = 0.0; warm(0, 1) = 0.0;  // at the mean -> beta -> theta = 0
    state.warmup(warm);
    // literal reading: join when u <= theta, so theta 0 spawns everything
    const std::vector<double> x{0.5, 0.5};
    const Decision d = state.process_instance(x.data());
    CHECK(d.kind == Decision::Kind::spawned);
}

TEST_CASE("process_instance: rejects non-finite input and pending warm-up") {
    RngState rng(27);
    Labeled data = make_blobs({{0, 0}}, 10, 1.0, rng);
    IMeansState pending = IMeansState::from_labeled(data.latents, data.labels,
                                                    data.class_names, quick_config(5));
    const std::vector<double> x{1.0, 2.0};
    CHECK_THROWS_WITH_AS(pending.process_instance(x.data()), doctest::Contains("warm-up"),
                         Error);

    IMeansState ready = IMeansState::from_labeled(data.latents, data.labels, data.class_names,
                                                  quick_config(1));
    Matrix warm(1, 2);
    warm(0, 0) = 0.0; warm(0, 1) = 0.0;
    ready.warmup(warm);
    const std::vector<double> bad{std::nan(""), 0.0};
    CHECK_THROWS_WITH_AS(ready.process_instance(bad.data()), doctest::Contains("non-finite"),
                         Error);
}

TEST_CASE("run_batch: empty set, bookkeeping invariants, blob recovery") {
    RngState rng(31);
    const Labeled data = make_blobs({{0, 0, 0}, {12, 0, 0}, {0, 12, 0}}, 60, 1.0, rng);

    SUBCASE("empty flagged set leaves the state alone") {
        IMeansState state = IMeansState::from_labeled(data.latents, data.labels,
                                                      data.class_names, quick_config(0));
        const BatchOutcome out = state.run_batch(Matrix(0, 3));
        CHECK(out.k_new_delta == 0);
        CHECK(state.k_new() == 0);
    }

    SUBCASE("cluster list length always equals k0 + k_new; online counts match") {
        IMeansConfig cfg = quick_config(30, 7);
        IMeansState state =
            IMeansState::from_labeled(data.latents, data.labels, data.class_names, cfg);
        // stream: warm-up from the knowns, then a mix of knowns and one blob at 40
        Matrix stream(120, 3);
        for (std::size_t r = 0; r < 120; ++r) {
            const bool outlier = r >= 80;
            for (std::size_t c = 0; c < 3; ++c)
                stream(r, c) = (outlier ? 40.0 : 0.0) + rng.normal();
        }
        const BatchOutcome out = state.run_batch(stream);
        CHECK(state.cluster_count() == state.k0() + state.k_new());
        // online counts: every post-warm-up instance contributes one online count
        std::int64_t online = 0;
        for (const BetaParams& b : state.beta_params()) online += b.alpha + b.beta;
        CHECK(online == 120 - 30);
        CHECK(out.decisions.size() == 120);
    }

    SUBCASE("two separated blobs spawn exactly two clusters in >= 8/10 seeds") {
        std::size_t exact = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            RngState stream_rng(100 + seed);
            IMeansConfig cfg = quick_config(40, seed);
            IMeansState state =
                IMeansState::from_labeled(data.latents, data.labels, data.class_names, cfg);
            // flagged stream: two blobs 20 sigma away from the knowns and from
            // each other, shuffled
            const std::vector<std::vector<double>> uc_centers = {{40, 40, 0}, {-40, 20, 30}};
            std::vector<std::size_t> order(200);
            Matrix stream(200, 3);
            for (std::size_t r = 0; r < 200; ++r) order[r] = r;
            stream_rng.shuffle(order);
            for (std::size_t r = 0; r < 200; ++r) {
                const auto& c = uc_centers[order[r] % 2];
                for (std::size_t d = 0; d < 3; ++d) stream(r, d) = c[d] + stream_rng.normal();
            }
            IMeansState run = state;
            const BatchOutcome out = run.run_batch(stream);
            exact += out.k_new_delta == 2;
        }
        CHECK(exact >= 8);
    }

    SUBCASE("permuted processing order may change the outcome but recovery holds") {
        // sequential dependence is expected; assert only ground-truth recovery
        RngState stream_rng(55);
        Matrix stream(100, 3);
        for (std::size_t r = 0; r < 100; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                stream(r, c) = 50.0 + stream_rng.normal();
        IMeansConfig cfg = quick_config(20, 3);
        IMeansState forward =
            IMeansState::from_labeled(data.latents, data.labels, data.class_names, cfg);
        IMeansState reversed = forward;
        const BatchOutcome a = forward.run_batch(stream);
        Matrix flipped(100, 3);
        for (std::size_t r = 0; r < 100; ++r)
            for (std::size_t c = 0; c < 3; ++c) flipped(r, c) = stream(99 - r, c);
        const BatchOutcome b = reversed.run_batch(flipped);
        CHECK(a.k_new_delta == 1);
        CHECK(b.k_new_delta == 1);
    }
}

TEST_CASE("sigma from scratch matches the streaming value") {
    RngState rng(61);
    Labeled data = make_blobs({{0, 0}}, 5, 1.0, rng);
    IMeansState state = IMeansState::from_labeled(data.latents, data.labels, data.class_names,
                                                  quick_config(1));
    Matrix warm(1, 2);
    warm(0, 0) = 0.0; warm(0, 1) = 0.0;
    state.warmup(warm);

    // stream more members into cluster 0 and recompute sigma from all points
    std::vector<std::vector<double>> members;
    for (std::size_t r = 0; r < data.latents.rows; ++r)
        members.push_back({data.latents(r, 0), data.latents(r, 1)});
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x{rng.normal() * 0.8, rng.normal() * 1.3};
        const Decision d = state.process_instance(x.data());
        REQUIRE(d.kind == Decision::Kind::joined);
        REQUIRE(d.cluster == 0);
        members.push_back(x);
    }
    Matrix all(members.size(), 2);
    for (std::size_t r = 0; r < members.size(); ++r) {
        all(r, 0) = members[r][0];
        all(r, 1) = members[r][1];
    }
    const std::vector<double> mean = column_mean(all);
    const std::vector<double> var = column_variance(all, mean, 1);
    const ClusterState& c = state.clusters()[0];
    CHECK(c.count == members.size());
    for (std::size_t d = 0; d < 2; ++d) {
        CHECK(c.mean[d] == doctest::Approx(mean[d]).epsilon(1e-10));
        CHECK(c.sigma[d] == doctest::Approx(std::sqrt(var[d])).epsilon(1e-10));
    }
}

TEST_CASE("json snapshot: round trip preserves the state and stream position") {
    RngState rng(71);
    Labeled data = make_blobs({{0, 0}, {15, 15}}, 25, 1.0, rng);
    IMeansState state = IMeansState::from_labeled(data.latents, data.labels, data.class_names,
                                                  quick_config(2, 99));
    Matrix warm(2, 2);
    warm(0, 0) = 0.0; warm(0, 1) = 0.0;
    warm(1, 0) = 60.0; warm(1, 1) = 60.0;
    state.warmup(warm);
    Matrix stream = sample_standard_normal(rng, 10, 2);
    state.run_batch(stream);

    IMeansState restored = IMeansState::from_json(state.to_json());
    CHECK(restored.k0() == state.k0());
    CHECK(restored.k_new() == state.k_new());
    CHECK(restored.cluster_count() == state.cluster_count());
    CHECK(restored.clusters()[0].mean == state.clusters()[0].mean);
    CHECK(restored.beta_params()[0].beta_prior == state.beta_params()[0].beta_prior);

    // identical continuation: both copies process the same stream identically
    Matrix more = sample_standard_normal(rng, 25, 2);
    const BatchOutcome a = state.run_batch(more);
    const BatchOutcome b = restored.run_batch(more);
    CHECK(a.k_new_delta == b.k_new_delta);
    for (std::size_t i = 0; i < a.decisions.size(); ++i) {
        CHECK(a.decisions[i].kind == b.decisions[i].kind);
        CHECK(a.decisions[i].cluster == b.decisions[i].cluster);
    }
}

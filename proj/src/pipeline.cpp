#include "negm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "negm/detector.hpp"
#include "negm/error.hpp"
#include "negm/metrics.hpp"

namespace negm {

namespace {

void ensure_out_dir(const Config& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir(), ec);
    if (ec) fail(ErrorKind::usage, "cannot create output directory: " + cfg.out_dir());
}

[[noreturn]] void fail_stage(ErrorKind kind, const std::string& stage, const Error& inner) {
    fail(kind, stage + ": " + inner.what());
}

TrainConfig train_config_from(const Config& cfg) {
    TrainConfig tc;
    tc.epochs = cfg.get_uint("train.epochs");
    tc.batch_size = cfg.get_uint("train.batch_size");
    tc.latent_dim = cfg.get_uint("train.latent_dim");
    tc.adam.step_size = cfg.get_real("train.step_size");
    tc.adam.beta1 = cfg.get_real("train.beta1");
    tc.adam.beta2 = cfg.get_real("train.beta2");
    tc.adam.epsilon = cfg.get_real("train.epsilon");
    tc.prior_warmup_epochs = cfg.get_uint("train.prior_warmup_epochs");
    tc.prior_refit_interval = cfg.get_uint("train.prior_refit_interval");
    tc.seed = cfg.get_uint("seed");
    tc.validate();
    return tc;
}

EmConfig em_config_from(const Config& cfg) {
    EmConfig em;
    em.max_iterations = cfg.get_uint("train.gmm_max_iterations");
    em.tolerance = cfg.get_real("train.gmm_tolerance");
    em.seed = cfg.get_uint("seed") ^ 0xA5A5A5A5ULL;
    return em;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

IMeansState imeans_from_statistics(const Matrix& means, const Matrix& sigmas,
                                   const std::vector<std::size_t>& counts,
                                   const IMeansConfig& config) {
    if (means.rows == 0 || means.rows != sigmas.rows || means.cols != sigmas.cols ||
        counts.size() != means.rows)
        fail(ErrorKind::usage, "imeans statistics: inconsistent shapes");
    // Route through the prior-based factory: express each class as a diagonal
    // Gaussian whose factor is diag(sigma).
    MixturePrior prior;
    prior.latent_dim = means.cols;
    for (std::size_t k = 0; k < means.rows; ++k) {
        GaussianComponent comp;
        comp.mean.assign(means.row_ptr(k), means.row_ptr(k) + means.cols);
        comp.factor = Matrix(means.cols, means.cols);
        for (std::size_t i = 0; i < means.cols; ++i) comp.factor(i, i) = sigmas(k, i);
        prior.components.push_back(std::move(comp));
        prior.weights.push_back(1.0 / static_cast<double>(means.rows));
    }
    // weights must sum to exactly one for validate(); rescale the last entry
    double sum = 0.0;
    for (double w : prior.weights) sum += w;
    for (double& w : prior.weights) w /= sum;
    return IMeansState::from_prior(prior, counts, config);
}

GmmPriorProvider::GmmPriorProvider(const Matrix& normalized_train, std::size_t k,
                                   const TrainConfig& config, const EmConfig& em_config)
    : train_(normalized_train), k_(k), train_config_(config), em_config_(em_config) {}

Matrix GmmPriorProvider::sample(std::size_t n, RngState& rng) {
    if (!has_mixture_) {
        Matrix z(n, train_config_.latent_dim);
        for (double& v : z.values) v = rng.normal();
        return z;
    }
    return sample_prior(mixture_, n, rng).values;
}

void GmmPriorProvider::on_epoch_end(const BiganModel& model, std::size_t epoch) {
    const std::size_t done = epoch + 1;
    if (done < train_config_.prior_warmup_epochs) return;
    const std::size_t since_warmup = done - train_config_.prior_warmup_epochs;
    if (since_warmup % train_config_.prior_refit_interval != 0) return;
    EmConfig em = em_config_;
    em.seed = em_config_.seed + refit_count_;
    const Matrix encoded = model.encode(train_);
    if (has_mixture_) {
        mixture_ = refit_with_new_classes(mixture_, encoded, 0, {}, em).prior;
    } else {
        mixture_ = fit_em(encoded, k_, em).prior;
        has_mixture_ = true;
    }
    ++refit_count_;
}

LoadedDataset load_dataset(const Config& cfg) {
    const std::string path = cfg.get_string("data.path");
    if (path.empty()) fail(ErrorKind::usage, "data.path is not set");

    LoadedDataset out;
    if (ends_with(path, ".csv")) {
        const std::string schema_name = cfg.get_string("data.schema");
        TableSchema schema;
        if (schema_name == "kdd")
            schema = kdd_schema();
        else
            fail(ErrorKind::usage, "unknown data.schema '" + schema_name + "' (supported: kdd)");
        const RawTable table = load_csv(path, schema);
        Encoder::DropPolicy policy;
        policy.drop_columns = cfg.get_list("data.drop");
        out.features = encode(table, policy);
        out.encoded_width = out.features.data.cols;
    } else {
        out.features = load_feature_matrix(path);
        out.encoded_width = out.features.data.cols;
    }

    out.unknown_classes = cfg.get_list("split.unknown");
    out.known_classes = cfg.get_list("split.known");
    if (out.known_classes.empty()) {
        const std::set<std::string> unknown(out.unknown_classes.begin(),
                                            out.unknown_classes.end());
        for (const std::string& cls : out.features.class_names)
            if (!unknown.count(cls)) out.known_classes.push_back(cls);
    }
    return out;
}

std::string run_synth(const Config& cfg) {
    ensure_out_dir(cfg);
    SyntheticSpec spec;
    spec.n_clusters = cfg.get_uint("synth.clusters");
    spec.instances_per_cluster = cfg.get_uint("synth.per_cluster");
    spec.dimension = cfg.get_uint("synth.dim");
    spec.mean_range = cfg.get_real("synth.mean_range");
    spec.scale_min = cfg.get_real("synth.scale_min");
    spec.scale_max = cfg.get_real("synth.scale_max");
    spec.noise_fraction = cfg.get_real("synth.noise_fraction");
    spec.noise_multiplier = cfg.get_real("synth.noise_multiplier");
    spec.seed = cfg.get_uint("seed");

    const FeatureMatrix fm = generate_synthetic(spec);
    const std::string path = cfg.path_or_default("synth.out", "synthetic.negm");
    save_feature_matrix(fm, path);

    nlohmann::json summary;
    summary["command"] = "synth";
    summary["path"] = path;
    summary["rows"] = fm.data.rows;
    summary["cols"] = fm.data.cols;
    summary["classes"] = fm.class_names.size();
    return summary.dump(2);
}

std::string run_train(const Config& cfg) {
    ensure_out_dir(cfg);

    // stage: data
    LoadedDataset data;
    Split split;
    try {
        data = load_dataset(cfg);
        SplitSpec spec;
        spec.known_classes = data.known_classes;
        spec.unknown_classes = data.unknown_classes;
        spec.known_test_fraction = cfg.get_real("split.test_fraction");
        spec.seed = cfg.get_uint("seed");
        split = build_splits(data.features, spec);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::usage) throw;
        fail_stage(ErrorKind::train, "data stage", e);
    }

    const TrainConfig tc = train_config_from(cfg);
    const EmConfig em = em_config_from(cfg);

    // stage: normalize
    Normalizer normalizer = Normalizer::fit(split.train);
    const FeatureMatrix train_norm = normalizer.apply(split.train);

    // stage: adversarial training with the mixture prior
    TrainResult trained;
    GmmPriorProvider provider(train_norm.data, split.train.class_names.size(), tc, em);
    try {
        trained = train_bigan(train_norm.data, provider, tc);
    } catch (const Error& e) {
        fail_stage(ErrorKind::train, "training stage", e);
    }

    // stage: final prior fit on the trained encodings
    MixturePrior prior;
    try {
        const Matrix encoded = trained.model.encode(train_norm.data);
        EmConfig final_em = em;
        final_em.seed = em.seed + 0xFFFF;
        prior = fit_em(encoded, split.train.class_names.size(), final_em).prior;
    } catch (const Error& e) {
        fail_stage(ErrorKind::train, "prior stage", e);
    }

    // stage: baselines and per-class latent statistics
    Checkpoint ckpt;
    try {
        ckpt.model = std::move(trained.model);
        ckpt.prior = std::move(prior);
        ckpt.normalizer = normalizer;
        ckpt.baselines = fit_baselines(ckpt.model, train_norm);
        ckpt.class_names = ckpt.baselines.class_names;
        const Matrix encoded = ckpt.model.encode(train_norm.data);
        const std::size_t k = ckpt.class_names.size();
        const std::size_t p = encoded.cols;
        ckpt.class_latent_means = Matrix(k, p);
        ckpt.class_latent_sigmas = Matrix(k, p);
        for (std::size_t c = 0; c < k; ++c) {
            const std::vector<std::size_t> rows =
                train_norm.rows_of_class(ckpt.class_names[c]);
            const Matrix sub = take_rows(encoded, rows);
            const std::vector<double> mean = column_mean(sub);
            const std::vector<double> var =
                column_variance(sub, mean, rows.size() >= 2 ? 1 : 0);
            for (std::size_t i = 0; i < p; ++i) {
                ckpt.class_latent_means(c, i) = mean[i];
                ckpt.class_latent_sigmas(c, i) = rows.size() >= 2 ? std::sqrt(var[i]) : 0.0;
            }
            ckpt.class_counts.push_back(rows.size());
        }
        ckpt.seed = cfg.get_uint("seed");
    } catch (const Error& e) {
        fail_stage(ErrorKind::train, "baseline stage", e);
    }

    // stage: artifacts
    const std::string ckpt_path = cfg.path_or_default("train.checkpoint", "checkpoint.negm");
    const std::string loss_path = cfg.out_dir() + "/loss_history.csv";
    const std::string test_path = cfg.out_dir() + "/test_stream.negm";
    try {
        save_checkpoint(ckpt, ckpt_path);
        std::ofstream loss_file(loss_path);
        if (!loss_file) fail(ErrorKind::train, "cannot write " + loss_path);
        loss_file << "epoch,d_loss,ge_loss\n";
        loss_file.precision(17);
        for (std::size_t e = 0; e < trained.loss_history.size(); ++e)
            loss_file << e << ',' << trained.loss_history[e].discriminator << ','
                      << trained.loss_history[e].generator_encoder << '\n';
        save_feature_matrix(split.test, test_path);
    } catch (const Error& e) {
        fail_stage(ErrorKind::train, "artifact stage", e);
    }

    nlohmann::json summary;
    summary["command"] = "train";
    summary["checkpoint"] = ckpt_path;
    summary["loss_history"] = loss_path;
    summary["test_stream"] = test_path;
    summary["epochs"] = tc.epochs;
    summary["train_rows"] = split.train.data.rows;
    summary["test_rows"] = split.test.data.rows;
    summary["d"] = data.encoded_width;
    summary["p"] = tc.latent_dim;
    summary["known_classes"] = ckpt.class_names.size();
    summary["prior_refits"] = provider.refit_count();
    if (!trained.loss_history.empty()) {
        summary["final_d_loss"] = trained.loss_history.back().discriminator;
        summary["final_ge_loss"] = trained.loss_history.back().generator_encoder;
    }
    return summary.dump(2);
}

std::string run_detect(const Config& cfg) {
    ensure_out_dir(cfg);

    const std::string ckpt_path = cfg.path_or_default("detect.checkpoint", "checkpoint.negm");
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (!ckpt.model.trained())
        fail(ErrorKind::checkpoint, "checkpoint model is untrained: " + ckpt_path);

    const std::string test_path = cfg.path_or_default("detect.test", "test_stream.negm");
    const FeatureMatrix stream = load_feature_matrix(test_path);
    if (stream.data.cols != ckpt.model.data_dim())
        fail(ErrorKind::usage, "test stream width " + std::to_string(stream.data.cols) +
                                   " does not match checkpoint d=" +
                                   std::to_string(ckpt.model.data_dim()));

    const std::size_t batch_size = cfg.get_uint("detect.batch_size");
    if (batch_size < 1) fail(ErrorKind::usage, "detect.batch_size must be >= 1");

    ThresholdPolicy policy;
    policy.first_batch_quantile = cfg.get_real("detect.first_batch_quantile");
    policy.ema_decay = cfg.get_real("detect.ema_decay");
    policy.validate();

    IMeansConfig imc;
    imc.warmup_size = cfg.get_uint("detect.ws");
    imc.literal_branch = cfg.get_flag("detect.literal_branch");
    imc.spawned_prior_alpha = cfg.get_int("detect.spawn_prior_alpha");
    imc.seed = cfg.get_uint("seed") ^ 0x51515151ULL;
    IMeansState imeans = imeans_from_statistics(ckpt.class_latent_means,
                                                ckpt.class_latent_sigmas, ckpt.class_counts, imc);

    const std::size_t refit_every = cfg.get_uint("detect.refit_every");
    MixturePrior prior = ckpt.prior;
    EmConfig em = em_config_from(cfg);

    const std::string report_path = cfg.path_or_default("detect.report", "report.jsonl");
    std::ofstream report(report_path);
    if (!report) fail(ErrorKind::usage, "cannot write report file: " + report_path);

    const std::size_t n = stream.data.rows;
    const std::size_t batches = n == 0 ? 0 : (n + batch_size - 1) / batch_size;
    std::size_t cumulative_k_new = 0;
    std::size_t flagged_total = 0;
    std::size_t batch_errors = 0;
    std::vector<std::vector<double>> pending_spawn_means;

    for (std::size_t bi = 0; bi < batches; ++bi) {
        const std::size_t begin = bi * batch_size;
        const std::size_t end = std::min(n, begin + batch_size);
        nlohmann::json record;
        record["batch"] = bi;
        try {
            std::vector<std::size_t> rows(end - begin);
            for (std::size_t i = begin; i < end; ++i) rows[i - begin] = i;
            const Matrix raw = take_rows(stream.data, rows);
            const Matrix x = ckpt.normalizer.apply(raw);

            const std::vector<double> losses = reconstruction_loss(ckpt.model, x);
            const std::vector<double> scores = ucs_scores(losses, ckpt.baselines);
            const ExtractionResult extraction = extract_unknown(scores, policy, bi);
            policy = extraction.policy;

            const Matrix latent = ckpt.model.encode(x);
            const Matrix flagged_latent = take_rows(latent, extraction.uc_indices);
            const BatchOutcome outcome = imeans.run_batch(flagged_latent);
            cumulative_k_new += outcome.k_new_delta;
            flagged_total += extraction.uc_indices.size();
            for (const auto& m : outcome.spawned_means) pending_spawn_means.push_back(m);

            if (refit_every > 0 && (bi + 1) % refit_every == 0) {
                EmConfig batch_em = em;
                batch_em.seed = em.seed + 1 + bi;
                prior = refit_with_new_classes(prior, latent, pending_spawn_means.size(),
                                               pending_spawn_means, batch_em)
                            .prior;
                pending_spawn_means.clear();
            }

            std::vector<double> sorted(scores);
            std::sort(sorted.begin(), sorted.end());
            std::vector<std::size_t> global_flagged;
            for (std::size_t i : extraction.uc_indices) global_flagged.push_back(begin + i);

            record["rows"] = end - begin;
            record["threshold"] = extraction.threshold;
            record["flagged"] = extraction.uc_indices.size();
            record["flagged_indices"] = global_flagged;
            record["k_new_delta"] = outcome.k_new_delta;
            record["k_new_total"] = cumulative_k_new;
            record["components"] = prior.component_count();
            record["scores"] = {{"min", sorted.front()},
                                {"median", sorted[sorted.size() / 2]},
                                {"max", sorted.back()}};
        } catch (const Error& e) {
            // Record the failure and keep consuming the stream.
            ++batch_errors;
            record["error"] = e.what();
        }
        report << record.dump() << '\n';
    }
    if (!report) fail(ErrorKind::usage, "failed writing report file: " + report_path);

    nlohmann::json summary;
    summary["command"] = "detect";
    summary["report"] = report_path;
    summary["batches"] = batches;
    summary["rows"] = n;
    summary["flagged_total"] = flagged_total;
    summary["k0"] = ckpt.class_names.size();
    summary["k_new"] = cumulative_k_new;
    summary["components"] = prior.component_count();
    summary["batch_errors"] = batch_errors;
    summary["imeans"] = nlohmann::json::parse(imeans.to_json());
    return summary.dump(2);
}

std::string run_eval(const Config& cfg) {
    ensure_out_dir(cfg);

    const std::string report_path = cfg.path_or_default("eval.report", "report.jsonl");
    const std::string test_path = cfg.path_or_default("eval.test", "test_stream.negm");
    const std::string ckpt_path = cfg.path_or_default("eval.checkpoint", "checkpoint.negm");

    const FeatureMatrix stream = load_feature_matrix(test_path);
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const std::set<std::string> known(ckpt.class_names.begin(), ckpt.class_names.end());

    std::ifstream report(report_path);
    if (!report) fail(ErrorKind::eval, "cannot open report file: " + report_path);

    std::vector<bool> predicted(stream.data.rows, false);
    std::size_t k_new_total = 0;
    std::size_t batches = 0;
    std::string line;
    while (std::getline(report, line)) {
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::eval, std::string("corrupt report line: ") + e.what());
        }
        ++batches;
        if (record.contains("error")) continue;
        for (const auto& idx : record.at("flagged_indices")) {
            const std::size_t i = idx.get<std::size_t>();
            if (i >= predicted.size())
                fail(ErrorKind::eval, "report flags row " + std::to_string(i) +
                                          " outside the test stream (" +
                                          std::to_string(predicted.size()) + " rows)");
            predicted[i] = true;
        }
        if (record.contains("k_new_total"))
            k_new_total = record.at("k_new_total").get<std::size_t>();
    }
    if (batches == 0) fail(ErrorKind::eval, "report file has no batch records: " + report_path);

    std::vector<bool> truth(stream.data.rows, false);
    std::set<std::string> unknown_classes;
    for (std::size_t r = 0; r < stream.labels.size(); ++r) {
        if (!known.count(stream.labels[r])) {
            truth[r] = true;
            unknown_classes.insert(stream.labels[r]);
        }
    }

    const double f1 = f1_unknown(predicted, truth);
    const double true_k = static_cast<double>(unknown_classes.size());
    const double predicted_k = static_cast<double>(k_new_total);
    const double rmse_value = rmse({predicted_k}, {true_k});

    nlohmann::json metrics;
    metrics["f1"] = f1;
    metrics["true_k"] = unknown_classes.size();
    metrics["predicted_k"] = k_new_total;
    metrics["rmse"] = rmse_value;
    if (!cfg.is_empty("eval.baseline_rmse")) {
        const double baseline = cfg.get_real("eval.baseline_rmse");
        metrics["baseline_rmse"] = baseline;
        metrics["s_r2"] = s_r2(rmse_value, baseline);
    }
    const ConfusionCounts counts = confusion(predicted, truth);
    metrics["confusion"] = {{"tp", counts.true_positives},
                            {"fp", counts.false_positives},
                            {"fn", counts.false_negatives},
                            {"tn", counts.true_negatives}};

    const std::string metrics_json_path = cfg.path_or_default("eval.out", "metrics.json");
    {
        std::ofstream out(metrics_json_path);
        if (!out) fail(ErrorKind::eval, "cannot write metrics file: " + metrics_json_path);
        out << metrics.dump(2) << '\n';
    }
    const std::string metrics_csv_path =
        metrics_json_path.size() > 5 && ends_with(metrics_json_path, ".json")
            ? metrics_json_path.substr(0, metrics_json_path.size() - 5) + ".csv"
            : metrics_json_path + ".csv";
    {
        std::ofstream out(metrics_csv_path);
        if (!out) fail(ErrorKind::eval, "cannot write metrics file: " + metrics_csv_path);
        out << "f1,rmse,true_k,predicted_k,s_r2\n";
        out.precision(17);
        out << f1 << ',' << rmse_value << ',' << unknown_classes.size() << ',' << k_new_total
            << ',';
        if (metrics.contains("s_r2")) out << metrics["s_r2"].get<double>();
        out << '\n';
    }

    nlohmann::json summary = metrics;
    summary["command"] = "eval";
    summary["metrics_json"] = metrics_json_path;
    summary["metrics_csv"] = metrics_csv_path;
    return summary.dump(2);
}

}  // namespace negm

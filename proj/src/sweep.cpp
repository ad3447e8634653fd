#include "negm/sweep.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "negm/error.hpp"
#include "negm/pipeline.hpp"
#include "negm/rng.hpp"

namespace negm {

namespace {

std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    if (k > n || k == 0) return out;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        out.push_back(idx);
        std::ptrdiff_t i = static_cast<std::ptrdiff_t>(k) - 1;
        while (i >= 0 && idx[i] == n - k + static_cast<std::size_t>(i)) --i;
        if (i < 0) break;
        ++idx[i];
        for (std::size_t j = static_cast<std::size_t>(i) + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}  // namespace

SweepResult run_uc_sweep(const Config& cfg) {
    const std::size_t count_min = cfg.get_uint("sweep.count_min");
    const std::size_t count_max = cfg.get_uint("sweep.count_max");
    const std::size_t max_combinations = cfg.get_uint("sweep.combinations");
    const std::size_t n_seeds = std::max<std::size_t>(1, cfg.get_uint("sweep.seeds"));
    if (count_min < 1 || count_max < count_min)
        fail(ErrorKind::usage, "sweep: count range invalid");
    if (max_combinations < 1) fail(ErrorKind::usage, "sweep: need at least one combination");

    const LoadedDataset data = load_dataset(cfg);
    const std::vector<std::string>& pool = data.unknown_classes;
    if (pool.size() < count_max)
        fail(ErrorKind::usage, "sweep: split.unknown lists " + std::to_string(pool.size()) +
                                   " candidate classes, need at least " +
                                   std::to_string(count_max));

    // Knowns resolved against the full pool so unused pool classes stay
    // excluded from every sweep run.
    std::vector<std::string> known = cfg.get_list("split.known");
    if (known.empty()) {
        const std::set<std::string> pool_set(pool.begin(), pool.end());
        for (const std::string& cls : data.features.class_names)
            if (!pool_set.count(cls)) known.push_back(cls);
    }
    if (known.empty()) fail(ErrorKind::usage, "sweep: no known classes remain");

    const std::string sweep_dir = cfg.out_dir() + "/sweep";
    std::error_code ec;
    std::filesystem::create_directories(sweep_dir, ec);
    if (ec) fail(ErrorKind::usage, "cannot create sweep directory: " + sweep_dir);

    const std::vector<std::string> ws_list = cfg.get_list("sweep.ws_list");
    RngState combo_rng(cfg.get_uint("seed") ^ 0xC0FFEEULL);

    SweepResult result;
    nlohmann::json ws_curves = nlohmann::json::object();

    for (std::size_t count = count_min; count <= count_max; ++count) {
        std::vector<std::vector<std::size_t>> combos = combinations(pool.size(), count);
        combo_rng.shuffle(combos);
        if (combos.size() > max_combinations) combos.resize(max_combinations);

        for (std::size_t ci = 0; ci < combos.size(); ++ci) {
            std::vector<std::string> uc;
            for (std::size_t idx : combos[ci]) uc.push_back(pool[idx]);
            std::sort(uc.begin(), uc.end());

            for (std::size_t si = 0; si < n_seeds; ++si) {
                SweepRow row;
                row.uc_count = count;
                row.combination = ci;
                row.seed = cfg.get_uint("seed") + si;
                row.unknown_classes = uc;
                row.true_k = count;

                Config run = cfg;
                std::ostringstream dir;
                dir << sweep_dir << "/c" << count << "_m" << ci << "_s" << si;
                run.set("out.dir", dir.str());
                run.set("split.known", join(known, ","));
                run.set("split.unknown", join(uc, ","));
                run.set("seed", std::to_string(row.seed));
                run.set("synth.out", "");
                run.set("train.checkpoint", "");
                run.set("detect.checkpoint", "");
                run.set("detect.test", "");
                run.set("detect.report", "");
                run.set("eval.report", "");
                run.set("eval.test", "");
                run.set("eval.checkpoint", "");
                run.set("eval.out", "");

                try {
                    run_train(run);
                    run_detect(run);
                    const nlohmann::json metrics = nlohmann::json::parse(run_eval(run));
                    row.predicted_k = metrics.at("predicted_k").get<std::size_t>();
                    row.f1 = metrics.at("f1").get<double>();
                } catch (const Error& e) {
                    row.error = e.what();
                }
                result.rows.push_back(row);

                // Warm-up-size study: rerun detection at each WS on the first
                // combination and seed of this count.
                if (!ws_list.empty() && ci == 0 && si == 0 && row.ok()) {
                    nlohmann::json curve = nlohmann::json::object();
                    for (const std::string& ws : ws_list) {
                        Config ws_run = run;
                        ws_run.set("detect.ws", ws);
                        ws_run.set("detect.report", dir.str() + "/report_ws" + ws + ".jsonl");
                        ws_run.set("eval.report", dir.str() + "/report_ws" + ws + ".jsonl");
                        ws_run.set("eval.out", dir.str() + "/metrics_ws" + ws + ".json");
                        try {
                            run_detect(ws_run);
                            const nlohmann::json m = nlohmann::json::parse(run_eval(ws_run));
                            curve[ws] = m.at("predicted_k").get<std::size_t>();
                        } catch (const Error& e) {
                            curve[ws] = nullptr;
                        }
                    }
                    ws_curves[std::to_string(count)] = std::move(curve);
                }
            }
        }
    }

    // Result files
    result.results_csv = cfg.path_or_default("sweep.out", "sweep_results.csv");
    {
        std::ofstream out(result.results_csv);
        if (!out) fail(ErrorKind::usage, "cannot write " + result.results_csv);
        out << "uc_count,combination,seed,classes,true_k,predicted_k,f1,error\n";
        out.precision(17);
        for (const SweepRow& r : result.rows) {
            out << r.uc_count << ',' << r.combination << ',' << r.seed << ','
                << join(r.unknown_classes, ";") << ',' << r.true_k << ',' << r.predicted_k << ','
                << r.f1 << ',' << r.error << '\n';
        }
    }
    nlohmann::json rows_json = nlohmann::json::array();
    for (const SweepRow& r : result.rows) {
        rows_json.push_back({{"uc_count", r.uc_count},
                             {"combination", r.combination},
                             {"seed", r.seed},
                             {"classes", r.unknown_classes},
                             {"true_k", r.true_k},
                             {"predicted_k", r.predicted_k},
                             {"f1", r.f1},
                             {"error", r.error}});
    }
    result.results_json = cfg.out_dir() + "/sweep_results.json";
    {
        std::ofstream out(result.results_json);
        if (!out) fail(ErrorKind::usage, "cannot write " + result.results_json);
        out << rows_json.dump(2) << '\n';
    }

    // Grouped predicted-vs-actual counts plus the WS curves, consumable by
    // any plotting tool.
    nlohmann::json plot;
    nlohmann::json grouped = nlohmann::json::object();
    for (std::size_t count = count_min; count <= count_max; ++count) {
        nlohmann::json actual = nlohmann::json::array();
        nlohmann::json predicted = nlohmann::json::array();
        for (const SweepRow& r : result.rows) {
            if (r.uc_count != count || !r.ok()) continue;
            actual.push_back(r.true_k);
            predicted.push_back(r.predicted_k);
        }
        grouped[std::to_string(count)] = {{"actual", actual}, {"predicted", predicted}};
    }
    plot["uc_counts"] = std::move(grouped);
    if (!ws_curves.empty()) plot["ws_curves"] = std::move(ws_curves);
    result.plot_data = cfg.out_dir() + "/plot_data.json";
    {
        std::ofstream out(result.plot_data);
        if (!out) fail(ErrorKind::usage, "cannot write " + result.plot_data);
        out << plot.dump(2) << '\n';
    }
    return result;
}

std::string run_sweep(const Config& cfg) {
    const SweepResult result = run_uc_sweep(cfg);
    std::size_t failures = 0;
    std::size_t exact = 0;
    std::size_t ok_rows = 0;
    for (const SweepRow& r : result.rows) {
        if (!r.ok()) {
            ++failures;
            continue;
        }
        ++ok_rows;
        if (r.predicted_k == r.true_k) ++exact;
    }
    nlohmann::json summary;
    summary["command"] = "sweep";
    summary["rows"] = result.rows.size();
    summary["failed_rows"] = failures;
    summary["exact_count_rows"] = exact;
    summary["completed_rows"] = ok_rows;
    summary["results_csv"] = result.results_csv;
    summary["results_json"] = result.results_json;
    summary["plot_data"] = result.plot_data;
    return summary.dump(2);
}

}  // namespace negm

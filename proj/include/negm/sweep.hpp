#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "negm/config.hpp"

namespace negm {

struct SweepRow {
    std::size_t uc_count = 0;
    std::size_t combination = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> unknown_classes;
    std::size_t true_k = 0;
    std::size_t predicted_k = 0;
    double f1 = 0.0;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string results_csv;
    std::string results_json;
    std::string plot_data;
};

// Varies the unknown-class count over sweep.count_min..count_max, sampling up
// to sweep.combinations class combinations per count from split.unknown, and
// runs train -> detect -> eval per combination and seed. Per-combination
// failures are recorded without aborting the sweep. When sweep.ws_list is
// set, detection additionally reruns per WS value on the first combination of
// each count to produce warm-up-size curves.
SweepResult run_uc_sweep(const Config& cfg);

std::string run_sweep(const Config& cfg);  // JSON summary wrapper

}  // namespace negm

#include "negmgan.h"

#include <cstring>
#include <exception>
#include <string>

#include "negm/config.hpp"
#include "negm/dataset.hpp"
#include "negm/error.hpp"
#include "negm/pipeline.hpp"
#include "negm/sweep.hpp"

struct negm_config {
    negm::Config impl;
};

namespace {

thread_local std::string g_last_error;

negm_status status_of(negm::ErrorKind kind) {
    switch (kind) {
        case negm::ErrorKind::usage: return NEGM_ERR_USAGE;
        case negm::ErrorKind::train: return NEGM_ERR_TRAIN;
        case negm::ErrorKind::checkpoint: return NEGM_ERR_CHECKPOINT;
        case negm::ErrorKind::eval: return NEGM_ERR_EVAL;
        case negm::ErrorKind::internal: return NEGM_ERR_INTERNAL;
    }
    return NEGM_ERR_INTERNAL;
}

char* copy_string(const std::string& text) {
    char* out = new char[text.size() + 1];
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

template <typename Fn>
negm_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return NEGM_OK;
    } catch (const negm::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return NEGM_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return NEGM_ERR_INTERNAL;
    }
}

using RunFn = std::string (*)(const negm::Config&);

negm_status run_command(const negm_config* config, char** summary_json, RunFn fn) {
    if (!config) {
        g_last_error = "null config";
        return NEGM_ERR_USAGE;
    }
    return guarded([&] {
        negm::Config cfg = config->impl;
        cfg.finalize();
        const std::string summary = fn(cfg);
        if (summary_json) *summary_json = copy_string(summary);
    });
}

}  // namespace

extern "C" {

negm_config* negm_config_create(void) { return new negm_config(); }

void negm_config_destroy(negm_config* config) { delete config; }

negm_status negm_config_load_file(negm_config* config, const char* path) {
    if (!config || !path) {
        g_last_error = "null argument";
        return NEGM_ERR_USAGE;
    }
    return guarded([&] { config->impl.load_file(path); });
}

negm_status negm_config_set(negm_config* config, const char* key, const char* value) {
    if (!config || !key || !value) {
        g_last_error = "null argument";
        return NEGM_ERR_USAGE;
    }
    return guarded([&] { config->impl.set(key, value); });
}

negm_status negm_config_echo(const negm_config* config, char** text) {
    if (!config || !text) {
        g_last_error = "null argument";
        return NEGM_ERR_USAGE;
    }
    return guarded([&] {
        negm::Config cfg = config->impl;
        cfg.finalize();
        *text = copy_string(cfg.echo());
    });
}

negm_status negm_run_synth(const negm_config* config, char** summary_json) {
    return run_command(config, summary_json, &negm::run_synth);
}

negm_status negm_run_train(const negm_config* config, char** summary_json) {
    return run_command(config, summary_json, &negm::run_train);
}

negm_status negm_run_detect(const negm_config* config, char** summary_json) {
    return run_command(config, summary_json, &negm::run_detect);
}

negm_status negm_run_eval(const negm_config* config, char** summary_json) {
    return run_command(config, summary_json, &negm::run_eval);
}

negm_status negm_run_sweep(const negm_config* config, char** summary_json) {
    return run_command(config, summary_json, &negm::run_sweep);
}

negm_status negm_dataset_info(const char* path, uint64_t* rows, uint64_t* cols,
                              uint64_t* classes) {
    if (!path) {
        g_last_error = "null path";
        return NEGM_ERR_USAGE;
    }
    return guarded([&] {
        const negm::FeatureMatrix fm = negm::load_feature_matrix(path);
        if (rows) *rows = fm.data.rows;
        if (cols) *cols = fm.data.cols;
        if (classes) *classes = fm.class_names.size();
    });
}

const char* negm_last_error(void) { return g_last_error.c_str(); }

void negm_string_free(char* text) { delete[] text; }

const char* negm_version(void) { return "1.0.0"; }

}  // extern "C"

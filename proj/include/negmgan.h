/*
 * negmgan — C API for the non-exhaustive Gaussian-mixture GAN library.
 *
 * All functions return negm_status; NEGM_OK is zero. On failure,
 * negm_last_error() returns a thread-local message describing what went
 * wrong. Strings returned through out-parameters are heap-allocated and
 * must be released with negm_string_free().
 */
#ifndef NEGMGAN_H
#define NEGMGAN_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define NEGM_API __declspec(dllexport)
#else
#define NEGM_API __attribute__((visibility("default")))
#endif

typedef enum negm_status {
    NEGM_OK = 0,
    NEGM_ERR_USAGE = 1,      /* bad arguments, config, or input files */
    NEGM_ERR_TRAIN = 2,      /* a training stage failed */
    NEGM_ERR_CHECKPOINT = 3, /* checkpoint missing, corrupt, or unsupported */
    NEGM_ERR_EVAL = 4,       /* evaluation inputs disagree */
    NEGM_ERR_INTERNAL = 5
} negm_status;

/* Opaque run configuration: flat typed key/value pairs. */
typedef struct negm_config negm_config;

NEGM_API negm_config* negm_config_create(void);
NEGM_API void negm_config_destroy(negm_config* config);
NEGM_API negm_status negm_config_load_file(negm_config* config, const char* path);
NEGM_API negm_status negm_config_set(negm_config* config, const char* key, const char* value);
/* Effective configuration as "key = value" lines. */
NEGM_API negm_status negm_config_echo(const negm_config* config, char** text);

/* Pipeline commands. Each validates the config, runs, writes its artifact
 * files, and returns a JSON summary. */
NEGM_API negm_status negm_run_synth(const negm_config* config, char** summary_json);
NEGM_API negm_status negm_run_train(const negm_config* config, char** summary_json);
NEGM_API negm_status negm_run_detect(const negm_config* config, char** summary_json);
NEGM_API negm_status negm_run_eval(const negm_config* config, char** summary_json);
NEGM_API negm_status negm_run_sweep(const negm_config* config, char** summary_json);

/* Shape and class count of a dataset container. */
NEGM_API negm_status negm_dataset_info(const char* path, uint64_t* rows, uint64_t* cols,
                                       uint64_t* classes);

NEGM_API const char* negm_last_error(void);
NEGM_API void negm_string_free(char* text);
NEGM_API const char* negm_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NEGMGAN_H */

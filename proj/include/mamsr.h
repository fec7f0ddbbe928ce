/* MAMNet super-resolution engine: C API.
 *
 * All functions return MAMSR_OK on success. On failure they return an error
 * code and leave a human-readable message retrievable (per thread) with
 * mamsr_last_error(). Objects returned through out-parameters are owned by
 * the caller and released with the matching *_free function.
 */

#ifndef MAMSR_H
#define MAMSR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MAMSR_API __declspec(dllexport)
#else
#define MAMSR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mamsr_status {
    MAMSR_OK = 0,
    MAMSR_ERR_INVALID_ARGUMENT = 1,
    MAMSR_ERR_SHAPE = 2,
    MAMSR_ERR_NOT_FOUND = 3,
    MAMSR_ERR_IO = 4,
    MAMSR_ERR_MALFORMED = 5,
    MAMSR_ERR_UNSUPPORTED = 6,
    MAMSR_ERR_BAD_MAGIC = 7,
    MAMSR_ERR_BAD_VERSION = 8,
    MAMSR_ERR_LENGTH_MISMATCH = 9,
    MAMSR_ERR_NUMERIC = 10,
    MAMSR_ERR_INTERNAL = 11
} mamsr_status;

typedef enum mamsr_pool_stat {
    MAMSR_POOL_MAX = 0,
    MAMSR_POOL_AVG = 1,
    MAMSR_POOL_VAR = 2,
    MAMSR_POOL_STDVAR = 3,
    MAMSR_POOL_POWER = 4
} mamsr_pool_stat;

/* Network architecture. Defaults (mamsr_config_default): 16 blocks, 64
 * channels, x2, all three paths, standardized-variance statistics,
 * reduction 16. */
typedef struct mamsr_config {
    int32_t blocks;
    int32_t channels;
    int32_t scale;      /* 2, 3 or 4 */
    int32_t use_csi;
    int32_t use_icd;
    int32_t use_csd;
    int32_t csi_stat;   /* mamsr_pool_stat */
    int32_t icd_stat;   /* mamsr_pool_stat */
    int32_t reduction;
    float eps;
} mamsr_config;

typedef struct mamsr_model mamsr_model;
typedef struct mamsr_report mamsr_report;

MAMSR_API const char* mamsr_status_name(mamsr_status status);

/* thread-local message for the most recent failure */
MAMSR_API const char* mamsr_last_error(void);

MAMSR_API void mamsr_config_default(mamsr_config* cfg);
MAMSR_API mamsr_status mamsr_config_validate(const mamsr_config* cfg);

/* exact parameter count for a configuration */
MAMSR_API mamsr_status mamsr_count_params(const mamsr_config* cfg, uint64_t* count);

/* percent parameter increase over the path-free baseline (per-path shares,
 * each rounded to two decimals, summed) */
MAMSR_API mamsr_status mamsr_param_increase_percent(const mamsr_config* cfg, double* percent);

/* newline-separated "name shape... count" listing plus the total; free with
 * mamsr_string_free */
MAMSR_API mamsr_status mamsr_param_summary(const mamsr_config* cfg, char** text);

MAMSR_API void mamsr_string_free(char* text);

/* fresh model, He-initialized from seed */
MAMSR_API mamsr_status mamsr_model_create(const mamsr_config* cfg, uint64_t seed, mamsr_model** model);

MAMSR_API mamsr_status mamsr_model_load(const char* path, mamsr_model** model);
MAMSR_API mamsr_status mamsr_model_save(const mamsr_model* model, const char* path);
MAMSR_API void mamsr_model_free(mamsr_model* model);

MAMSR_API mamsr_status mamsr_model_config(const mamsr_model* model, mamsr_config* cfg);
MAMSR_API mamsr_status mamsr_model_rgb_mean(const mamsr_model* model, float mean[3]);

/* Training. hr_dir is required; lr_dir/val_hr_dir/out_dir may be NULL.
 * on_log receives val_psnr = NaN when no validation ran at that record. */
typedef struct mamsr_train_options {
    int64_t iters;
    int32_t batch;
    int32_t patch;      /* LR patch size */
    double lr0;
    int64_t halve_every;
    uint64_t seed;
    int32_t augment;
    int32_t log_every;
    int32_t ckpt_every;
    int32_t val_every;
    const char* hr_dir;
    const char* lr_dir;
    const char* val_hr_dir;
    const char* out_dir;
    void (*on_log)(void* user, int64_t iter, double lr, double loss, double val_psnr);
    void* user;
} mamsr_train_options;

MAMSR_API void mamsr_train_options_default(mamsr_train_options* opts);
MAMSR_API mamsr_status mamsr_train(mamsr_model* model, const mamsr_train_options* opts);

/* single-image inference: PNG in, PNG out (scale x input dims) */
MAMSR_API mamsr_status mamsr_super_resolve_file(const mamsr_model* model, const char* input_png,
                                                const char* output_png);

/* Dataset evaluation. model may be NULL when baseline_bicubic or
 * identity_check is set. lr_dir may be NULL (built-in downscaler). */
typedef struct mamsr_eval_options {
    const char* lr_dir;
    int32_t shave;      /* < 0: use the scale */
    int32_t baseline_bicubic;
    int32_t identity_check;
} mamsr_eval_options;

MAMSR_API void mamsr_eval_options_default(mamsr_eval_options* opts);
MAMSR_API mamsr_status mamsr_evaluate_dir(const mamsr_model* model, const char* hr_dir, int32_t scale,
                                          const mamsr_eval_options* opts, mamsr_report** report);

MAMSR_API void mamsr_report_free(mamsr_report* report);
MAMSR_API size_t mamsr_report_rows(const mamsr_report* report);
MAMSR_API const char* mamsr_report_name(const mamsr_report* report, size_t row);
/* PSNR is +infinity for identical images */
MAMSR_API double mamsr_report_psnr(const mamsr_report* report, size_t row);
MAMSR_API double mamsr_report_ssim(const mamsr_report* report, size_t row);
MAMSR_API double mamsr_report_mean_psnr(const mamsr_report* report);
MAMSR_API double mamsr_report_mean_ssim(const mamsr_report* report);
MAMSR_API int32_t mamsr_report_shave(const mamsr_report* report);
/* CSV rendering (name,psnr_db,ssim); free with mamsr_string_free */
MAMSR_API mamsr_status mamsr_report_csv(const mamsr_report* report, char** text);
/* human-readable table; free with mamsr_string_free */
MAMSR_API mamsr_status mamsr_report_text(const mamsr_report* report, char** text);
MAMSR_API size_t mamsr_report_warnings(const mamsr_report* report);
MAMSR_API const char* mamsr_report_warning(const mamsr_report* report, size_t index);

/* Writes the block's modulation maps (CSI/ICD channel CSVs, per-channel
 * CSD/gate PNGs, min-max bounds sidecar) under out_dir. */
MAMSR_API mamsr_status mamsr_inspect(const mamsr_model* model, const char* input_png, int32_t block,
                                     const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MAMSR_H */

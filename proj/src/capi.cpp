#include "mamsr.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <string>

#include "core/checkpoint.hpp"
#include "core/eval.hpp"
#include "core/inspect.hpp"
#include "core/model.hpp"
#include "core/train.hpp"

using namespace mamsr;

struct mamsr_model {
    Model<float> impl;
};

struct mamsr_report {
    EvalReport impl;
};

namespace {

thread_local std::string t_last_error;

mamsr_status status_of(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return MAMSR_ERR_INVALID_ARGUMENT;
    case ErrorCode::shape_mismatch: return MAMSR_ERR_SHAPE;
    case ErrorCode::not_found: return MAMSR_ERR_NOT_FOUND;
    case ErrorCode::io: return MAMSR_ERR_IO;
    case ErrorCode::malformed: return MAMSR_ERR_MALFORMED;
    case ErrorCode::unsupported: return MAMSR_ERR_UNSUPPORTED;
    case ErrorCode::bad_magic: return MAMSR_ERR_BAD_MAGIC;
    case ErrorCode::bad_version: return MAMSR_ERR_BAD_VERSION;
    case ErrorCode::length_mismatch: return MAMSR_ERR_LENGTH_MISMATCH;
    case ErrorCode::numeric: return MAMSR_ERR_NUMERIC;
    }
    return MAMSR_ERR_INTERNAL;
}

template <typename F>
mamsr_status guarded(F&& fn) {
    try {
        fn();
        return MAMSR_OK;
    } catch (const Error& e) {
        t_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return MAMSR_ERR_INTERNAL;
    }
}

mamsr_status arg_error(const char* msg) {
    t_last_error = msg;
    return MAMSR_ERR_INVALID_ARGUMENT;
}

NetworkConfig to_core(const mamsr_config& c) {
    NetworkConfig cfg;
    cfg.blocks = c.blocks;
    cfg.channels = c.channels;
    cfg.scale = c.scale;
    cfg.csi = c.use_csi != 0;
    cfg.icd = c.use_icd != 0;
    cfg.csd = c.use_csd != 0;
    check_arg(c.csi_stat >= 0 && c.csi_stat <= 4 && c.icd_stat >= 0 && c.icd_stat <= 4,
              "config: bad pooling statistic");
    cfg.csi_stat = PoolStat(c.csi_stat);
    cfg.icd_stat = PoolStat(c.icd_stat);
    cfg.reduction = c.reduction;
    cfg.eps = c.eps;
    cfg.validate();
    return cfg;
}

mamsr_config from_core(const NetworkConfig& cfg) {
    mamsr_config c;
    c.blocks = cfg.blocks;
    c.channels = cfg.channels;
    c.scale = cfg.scale;
    c.use_csi = cfg.csi ? 1 : 0;
    c.use_icd = cfg.icd ? 1 : 0;
    c.use_csd = cfg.csd ? 1 : 0;
    c.csi_stat = int32_t(cfg.csi_stat);
    c.icd_stat = int32_t(cfg.icd_stat);
    c.reduction = cfg.reduction;
    c.eps = cfg.eps;
    return c;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

extern "C" {

const char* mamsr_status_name(mamsr_status status) {
    switch (status) {
    case MAMSR_OK: return "ok";
    case MAMSR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MAMSR_ERR_SHAPE: return "shape mismatch";
    case MAMSR_ERR_NOT_FOUND: return "not found";
    case MAMSR_ERR_IO: return "i/o error";
    case MAMSR_ERR_MALFORMED: return "malformed data";
    case MAMSR_ERR_UNSUPPORTED: return "unsupported";
    case MAMSR_ERR_BAD_MAGIC: return "bad magic";
    case MAMSR_ERR_BAD_VERSION: return "bad version";
    case MAMSR_ERR_LENGTH_MISMATCH: return "length mismatch";
    case MAMSR_ERR_NUMERIC: return "numeric error";
    case MAMSR_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

const char* mamsr_last_error(void) { return t_last_error.c_str(); }

void mamsr_config_default(mamsr_config* cfg) {
    if (!cfg) return;
    *cfg = from_core(NetworkConfig{});
}

mamsr_status mamsr_config_validate(const mamsr_config* cfg) {
    if (!cfg) return arg_error("cfg is null");
    return guarded([&] { to_core(*cfg); });
}

mamsr_status mamsr_count_params(const mamsr_config* cfg, uint64_t* count) {
    if (!cfg || !count) return arg_error("null argument");
    return guarded([&] { *count = uint64_t(count_params(to_core(*cfg))); });
}

mamsr_status mamsr_param_increase_percent(const mamsr_config* cfg, double* percent) {
    if (!cfg || !percent) return arg_error("null argument");
    return guarded([&] { *percent = param_increase_percent(to_core(*cfg)); });
}

mamsr_status mamsr_param_summary(const mamsr_config* cfg, char** text) {
    if (!cfg || !text) return arg_error("null argument");
    return guarded([&] {
        const NetworkConfig c = to_core(*cfg);
        std::ostringstream out;
        std::int64_t total = 0;
        for (const auto& spec : param_schema(c)) {
            out << spec.name << " (";
            for (std::size_t i = 0; i < spec.shape.size(); ++i) {
                if (i) out << "x";
                out << spec.shape[i];
            }
            out << ") " << spec.numel << "\n";
            total += spec.numel;
        }
        out << "total " << total << "\n";
        *text = dup_string(out.str());
    });
}

void mamsr_string_free(char* text) { delete[] text; }

mamsr_status mamsr_model_create(const mamsr_config* cfg, uint64_t seed, mamsr_model** model) {
    if (!cfg || !model) return arg_error("null argument");
    return guarded([&] {
        auto* m = new mamsr_model;
        m->impl.cfg = to_core(*cfg);
        m->impl.params = init_params<float>(m->impl.cfg, seed);
        *model = m;
    });
}

mamsr_status mamsr_model_load(const char* path, mamsr_model** model) {
    if (!path || !model) return arg_error("null argument");
    return guarded([&] {
        auto* m = new mamsr_model;
        try {
            m->impl = load_checkpoint(path);
        } catch (...) {
            delete m;
            throw;
        }
        *model = m;
    });
}

mamsr_status mamsr_model_save(const mamsr_model* model, const char* path) {
    if (!model || !path) return arg_error("null argument");
    return guarded([&] { save_checkpoint(model->impl, path); });
}

void mamsr_model_free(mamsr_model* model) { delete model; }

mamsr_status mamsr_model_config(const mamsr_model* model, mamsr_config* cfg) {
    if (!model || !cfg) return arg_error("null argument");
    *cfg = from_core(model->impl.cfg);
    return MAMSR_OK;
}

mamsr_status mamsr_model_rgb_mean(const mamsr_model* model, float mean[3]) {
    if (!model || !mean) return arg_error("null argument");
    for (int i = 0; i < 3; ++i) mean[i] = model->impl.rgb_mean[std::size_t(i)];
    return MAMSR_OK;
}

void mamsr_train_options_default(mamsr_train_options* opts) {
    if (!opts) return;
    std::memset(opts, 0, sizeof(*opts));
    opts->iters = 1000;
    opts->batch = 16;
    opts->patch = 48;
    opts->lr0 = 1e-4;
    opts->halve_every = 200000;
    opts->seed = 0;
    opts->augment = 1;
    opts->log_every = 100;
    opts->ckpt_every = 10000;
    opts->val_every = 10000;
}

mamsr_status mamsr_train(mamsr_model* model, const mamsr_train_options* opts) {
    if (!model || !opts) return arg_error("null argument");
    if (!opts->hr_dir) return arg_error("hr_dir is required");
    return guarded([&] {
        std::vector<std::string> warnings;
        Dataset data = load_dataset(opts->hr_dir, opts->lr_dir ? opts->lr_dir : "",
                                    model->impl.cfg.scale, &warnings);
        Dataset val;
        const Dataset* val_ptr = nullptr;
        if (opts->val_hr_dir) {
            val = load_dataset(opts->val_hr_dir, "", model->impl.cfg.scale, &warnings);
            val_ptr = &val;
        }

        TrainConfig tc;
        tc.batch = opts->batch;
        tc.patch_lr = opts->patch;
        tc.lr0 = opts->lr0;
        tc.halve_every = opts->halve_every;
        tc.max_iters = opts->iters;
        tc.seed = opts->seed;
        tc.augment = opts->augment != 0;
        tc.log_every = opts->log_every;
        tc.ckpt_every = opts->ckpt_every;
        tc.val_every = opts->val_every;

        TrainHooks hooks;
        if (opts->on_log) {
            hooks.on_log = [&](const TrainLogRecord& rec) {
                opts->on_log(opts->user, rec.iter, rec.lr, rec.loss,
                             rec.has_val ? rec.val_psnr : std::numeric_limits<double>::quiet_NaN());
            };
        }
        const TrainResult result =
            train(model->impl, data, tc, val_ptr, opts->out_dir ? opts->out_dir : "", hooks);
        if (result.aborted) {
            fail(ErrorCode::numeric, "training aborted: " + result.abort_reason);
        }
    });
}

mamsr_status mamsr_super_resolve_file(const mamsr_model* model, const char* input_png,
                                      const char* output_png) {
    if (!model || !input_png || !output_png) return arg_error("null argument");
    return guarded([&] {
        const Image lr = load_png(input_png);
        const Image sr = super_resolve(model->impl, lr);
        save_png(sr, output_png);
    });
}

void mamsr_eval_options_default(mamsr_eval_options* opts) {
    if (!opts) return;
    std::memset(opts, 0, sizeof(*opts));
    opts->shave = -1;
}

mamsr_status mamsr_evaluate_dir(const mamsr_model* model, const char* hr_dir, int32_t scale,
                                const mamsr_eval_options* opts, mamsr_report** report) {
    if (!hr_dir || !report) return arg_error("null argument");
    return guarded([&] {
        EvalOptions eo;
        if (opts) {
            if (opts->lr_dir) eo.lr_dir = opts->lr_dir;
            eo.shave = opts->shave;
            eo.baseline_bicubic = opts->baseline_bicubic != 0;
            eo.identity_check = opts->identity_check != 0;
        }
        auto* r = new mamsr_report;
        try {
            r->impl = evaluate(model ? &model->impl : nullptr, hr_dir, scale, eo);
        } catch (...) {
            delete r;
            throw;
        }
        *report = r;
    });
}

void mamsr_report_free(mamsr_report* report) { delete report; }

size_t mamsr_report_rows(const mamsr_report* report) { return report ? report->impl.rows.size() : 0; }

const char* mamsr_report_name(const mamsr_report* report, size_t row) {
    if (!report || row >= report->impl.rows.size()) return nullptr;
    return report->impl.rows[row].name.c_str();
}

double mamsr_report_psnr(const mamsr_report* report, size_t row) {
    if (!report || row >= report->impl.rows.size()) return std::numeric_limits<double>::quiet_NaN();
    return report->impl.rows[row].psnr_db;
}

double mamsr_report_ssim(const mamsr_report* report, size_t row) {
    if (!report || row >= report->impl.rows.size()) return std::numeric_limits<double>::quiet_NaN();
    return report->impl.rows[row].ssim;
}

double mamsr_report_mean_psnr(const mamsr_report* report) {
    return report ? report->impl.mean_psnr : std::numeric_limits<double>::quiet_NaN();
}

double mamsr_report_mean_ssim(const mamsr_report* report) {
    return report ? report->impl.mean_ssim : std::numeric_limits<double>::quiet_NaN();
}

int32_t mamsr_report_shave(const mamsr_report* report) { return report ? report->impl.shave : -1; }

mamsr_status mamsr_report_csv(const mamsr_report* report, char** text) {
    if (!report || !text) return arg_error("null argument");
    return guarded([&] { *text = dup_string(report_csv(report->impl)); });
}

mamsr_status mamsr_report_text(const mamsr_report* report, char** text) {
    if (!report || !text) return arg_error("null argument");
    return guarded([&] { *text = dup_string(report_table(report->impl)); });
}

size_t mamsr_report_warnings(const mamsr_report* report) {
    return report ? report->impl.warnings.size() : 0;
}

const char* mamsr_report_warning(const mamsr_report* report, size_t index) {
    if (!report || index >= report->impl.warnings.size()) return nullptr;
    return report->impl.warnings[index].c_str();
}

mamsr_status mamsr_inspect(const mamsr_model* model, const char* input_png, int32_t block,
                           const char* out_dir) {
    if (!model || !input_png || !out_dir) return arg_error("null argument");
    return guarded([&] {
        const Image input = load_png(input_png);
        dump_modulation_maps(model->impl, input, block, out_dir);
    });
}

} // extern "C"

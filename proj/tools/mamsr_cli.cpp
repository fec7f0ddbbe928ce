// Command-line front end for the MAMNet super-resolution engine. Talks to the
// engine exclusively through the C API in mamsr.h.

#include <CLI11.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mamsr.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

int exit_code_for(mamsr_status status) {
    switch (status) {
    case MAMSR_OK:
        return kExitOk;
    case MAMSR_ERR_NOT_FOUND:
    case MAMSR_ERR_IO:
    case MAMSR_ERR_MALFORMED:
        return kExitData;
    case MAMSR_ERR_NUMERIC:
    case MAMSR_ERR_INTERNAL:
        return kExitOther;
    default:
        return kExitConfig;
    }
}

int report_failure(const char* what, mamsr_status status) {
    std::fprintf(stderr, "error: %s: %s (%s)\n", what, mamsr_last_error(), mamsr_status_name(status));
    return exit_code_for(status);
}

const char* stat_name(int32_t stat) {
    switch (stat) {
    case MAMSR_POOL_MAX: return "max";
    case MAMSR_POOL_AVG: return "avg";
    case MAMSR_POOL_VAR: return "var";
    case MAMSR_POOL_STDVAR: return "stdvar";
    case MAMSR_POOL_POWER: return "power";
    }
    return "?";
}

std::string paths_string(const mamsr_config& cfg) {
    std::string s;
    if (cfg.use_csi) s += "csi";
    if (cfg.use_icd) s += s.empty() ? "icd" : ",icd";
    if (cfg.use_csd) s += s.empty() ? "csd" : ",csd";
    return s.empty() ? "none" : s;
}

void print_config(const mamsr_config& cfg) {
    std::printf("config: blocks=%d channels=%d scale=%d paths=%s csi-stat=%s icd-stat=%s reduction=%d eps=%g\n",
                cfg.blocks, cfg.channels, cfg.scale, paths_string(cfg).c_str(), stat_name(cfg.csi_stat),
                stat_name(cfg.icd_stat), cfg.reduction, double(cfg.eps));
}

// flag bundle shared by the subcommands that build a config from scratch
struct ConfigFlags {
    int blocks = 16;
    int channels = 64;
    int scale = 2;
    std::string paths = "csi,icd,csd";
    std::string csi_stat = "stdvar";
    std::string icd_stat = "stdvar";
    int reduction = 16;
    float eps = 1e-5f;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
    cmd->add_option("--blocks", flags.blocks, "Number of residual modulation blocks (R)");
    cmd->add_option("--channels", flags.channels, "Feature channels (C)");
    cmd->add_option("--scale", flags.scale, "Upscaling factor")->check(CLI::IsMember({2, 3, 4}));
    cmd->add_option("--paths", flags.paths, "Enabled modulation paths: none or a comma list of csi,icd,csd");
    cmd->add_option("--csi-stat", flags.csi_stat, "Pooling statistic for the CSI path")
        ->check(CLI::IsMember({"max", "avg", "var", "stdvar", "power"}));
    cmd->add_option("--icd-stat", flags.icd_stat, "Pooling statistic feeding the ICD path")
        ->check(CLI::IsMember({"max", "avg", "var", "stdvar", "power"}));
    cmd->add_option("--reduction", flags.reduction, "ICD bottleneck reduction ratio");
    cmd->add_option("--eps", flags.eps, "Standardization epsilon");
}

bool parse_stat(const std::string& name, int32_t* out) {
    if (name == "max") *out = MAMSR_POOL_MAX;
    else if (name == "avg") *out = MAMSR_POOL_AVG;
    else if (name == "var") *out = MAMSR_POOL_VAR;
    else if (name == "stdvar") *out = MAMSR_POOL_STDVAR;
    else if (name == "power") *out = MAMSR_POOL_POWER;
    else return false;
    return true;
}

bool build_config(const ConfigFlags& flags, mamsr_config* cfg) {
    mamsr_config_default(cfg);
    cfg->blocks = flags.blocks;
    cfg->channels = flags.channels;
    cfg->scale = flags.scale;
    cfg->reduction = flags.reduction;
    cfg->eps = flags.eps;
    if (!parse_stat(flags.csi_stat, &cfg->csi_stat)) return false;
    if (!parse_stat(flags.icd_stat, &cfg->icd_stat)) return false;
    cfg->use_csi = cfg->use_icd = cfg->use_csd = 0;
    if (flags.paths != "none") {
        std::string rest = flags.paths;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string tok = rest.substr(0, comma);
            rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
            if (tok == "csi") cfg->use_csi = 1;
            else if (tok == "icd") cfg->use_icd = 1;
            else if (tok == "csd") cfg->use_csd = 1;
            else {
                std::fprintf(stderr, "error: unknown path '%s' (expected csi, icd, csd or none)\n",
                             tok.c_str());
                return false;
            }
        }
    }
    return true;
}

struct ModelHandle {
    mamsr_model* ptr = nullptr;
    ~ModelHandle() { mamsr_model_free(ptr); }
};

struct ReportHandle {
    mamsr_report* ptr = nullptr;
    ~ReportHandle() { mamsr_report_free(ptr); }
};

int load_model_or_fail(const std::string& ckpt, ModelHandle& model) {
    const mamsr_status st = mamsr_model_load(ckpt.c_str(), &model.ptr);
    if (st != MAMSR_OK) return report_failure("loading checkpoint", st);
    mamsr_config cfg;
    mamsr_model_config(model.ptr, &cfg);
    print_config(cfg);
    return kExitOk;
}

int cmd_train(const ConfigFlags& flags, const std::string& ckpt, const std::string& hr_dir,
              const std::string& lr_dir, const std::string& val_dir, const std::string& out_dir,
              const mamsr_train_options& base_opts, uint64_t seed, bool no_augment) {
    ModelHandle model;
    if (!ckpt.empty()) {
        const int rc = load_model_or_fail(ckpt, model);
        if (rc != kExitOk) return rc;
    } else {
        mamsr_config cfg;
        if (!build_config(flags, &cfg)) return kExitConfig;
        const mamsr_status vst = mamsr_config_validate(&cfg);
        if (vst != MAMSR_OK) return report_failure("validating config", vst);
        print_config(cfg);
        const mamsr_status cst = mamsr_model_create(&cfg, seed, &model.ptr);
        if (cst != MAMSR_OK) return report_failure("creating model", cst);
    }

    mamsr_train_options opts = base_opts;
    opts.seed = seed;
    opts.augment = no_augment ? 0 : 1;
    opts.hr_dir = hr_dir.c_str();
    opts.lr_dir = lr_dir.empty() ? nullptr : lr_dir.c_str();
    opts.val_hr_dir = val_dir.empty() ? nullptr : val_dir.c_str();
    opts.out_dir = out_dir.c_str();
    opts.user = nullptr;
    opts.on_log = [](void*, int64_t iter, double lr, double loss, double val_psnr) {
        if (std::isnan(val_psnr)) {
            std::printf("%" PRId64 ",%.8g,%.8g\n", iter, lr, loss);
        } else {
            std::printf("%" PRId64 ",%.8g,%.8g,%.4f\n", iter, lr, loss, val_psnr);
        }
        std::fflush(stdout);
    };

    const mamsr_status st = mamsr_train(model.ptr, &opts);
    if (st != MAMSR_OK) return report_failure("training", st);
    std::printf("checkpoint: %s\n", (fs::path(out_dir) / "model.mamn").string().c_str());
    return kExitOk;
}

int cmd_sr(const std::string& ckpt, const std::string& input, const std::string& output, int scale_flag) {
    ModelHandle model;
    const int rc = load_model_or_fail(ckpt, model);
    if (rc != kExitOk) return rc;

    mamsr_config cfg;
    mamsr_model_config(model.ptr, &cfg);
    if (scale_flag > 0 && scale_flag != cfg.scale) {
        std::fprintf(stderr, "error: checkpoint is x%d but --scale %d was requested\n", cfg.scale,
                     scale_flag);
        return kExitConfig;
    }

    if (fs::is_directory(input)) {
        std::vector<fs::path> inputs;
        for (const auto& entry : fs::directory_iterator(input)) {
            if (entry.is_regular_file() && entry.path().extension() == ".png") {
                inputs.push_back(entry.path());
            }
        }
        std::sort(inputs.begin(), inputs.end());
        if (inputs.empty()) {
            std::fprintf(stderr, "error: no .png files in %s\n", input.c_str());
            return kExitData;
        }
        std::error_code ec;
        fs::create_directories(output, ec);
        for (const auto& in : inputs) {
            const fs::path out =
                fs::path(output) / (in.stem().string() + "_x" + std::to_string(cfg.scale) + ".png");
            const mamsr_status st = mamsr_super_resolve_file(model.ptr, in.string().c_str(),
                                                             out.string().c_str());
            if (st != MAMSR_OK) return report_failure(in.string().c_str(), st);
            std::printf("%s -> %s\n", in.string().c_str(), out.string().c_str());
        }
        return kExitOk;
    }

    const mamsr_status st = mamsr_super_resolve_file(model.ptr, input.c_str(), output.c_str());
    if (st != MAMSR_OK) return report_failure("super-resolving", st);
    std::printf("%s -> %s\n", input.c_str(), output.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& ckpt, const std::string& baseline, bool identity, const std::string& hr_dir,
             const std::string& lr_dir, int scale, int shave, const std::string& csv_path) {
    ModelHandle model;
    if (!ckpt.empty()) {
        const int rc = load_model_or_fail(ckpt, model);
        if (rc != kExitOk) return rc;
        mamsr_config cfg;
        mamsr_model_config(model.ptr, &cfg);
        scale = cfg.scale;
    } else if (baseline.empty() && !identity) {
        std::fprintf(stderr, "error: need --ckpt, --baseline bicubic, or --identity-check\n");
        return kExitConfig;
    }

    mamsr_eval_options opts;
    mamsr_eval_options_default(&opts);
    opts.lr_dir = lr_dir.empty() ? nullptr : lr_dir.c_str();
    opts.shave = shave;
    opts.baseline_bicubic = baseline == "bicubic" ? 1 : 0;
    opts.identity_check = identity ? 1 : 0;

    ReportHandle report;
    const mamsr_status st = mamsr_evaluate_dir(model.ptr, hr_dir.c_str(), scale, &opts, &report.ptr);
    if (st != MAMSR_OK) return report_failure("evaluating", st);

    char* text = nullptr;
    if (mamsr_report_text(report.ptr, &text) == MAMSR_OK) {
        std::printf("%s", text);
        mamsr_string_free(text);
    }
    char* csv = nullptr;
    if (mamsr_report_csv(report.ptr, &csv) == MAMSR_OK) {
        std::ofstream f(csv_path, std::ios::trunc);
        f << csv;
        mamsr_string_free(csv);
        if (!f.good()) {
            std::fprintf(stderr, "error: cannot write %s\n", csv_path.c_str());
            return kExitData;
        }
        std::printf("csv: %s\n", csv_path.c_str());
    }
    return kExitOk;
}

int cmd_params(const ConfigFlags& flags) {
    mamsr_config cfg;
    if (!build_config(flags, &cfg)) return kExitConfig;
    const mamsr_status vst = mamsr_config_validate(&cfg);
    if (vst != MAMSR_OK) return report_failure("validating config", vst);
    print_config(cfg);

    char* summary = nullptr;
    const mamsr_status st = mamsr_param_summary(&cfg, &summary);
    if (st != MAMSR_OK) return report_failure("counting parameters", st);
    std::printf("%s", summary);
    mamsr_string_free(summary);

    uint64_t count = 0;
    mamsr_count_params(&cfg, &count);
    double pct = 0.0;
    mamsr_param_increase_percent(&cfg, &pct);
    std::printf("total %" PRIu64 " (%" PRIu64 "K), +%.2f%% over the path-free baseline\n", count,
                uint64_t(std::llround(double(count) / 1000.0)), pct);
    return kExitOk;
}

int cmd_inspect(const std::string& ckpt, const std::string& input, int block, const std::string& out_dir) {
    ModelHandle model;
    const int rc = load_model_or_fail(ckpt, model);
    if (rc != kExitOk) return rc;
    const mamsr_status st = mamsr_inspect(model.ptr, input.c_str(), block, out_dir.c_str());
    if (st != MAMSR_OK) return report_failure("inspecting", st);
    std::printf("modulation maps for block %d written to %s\n", block, out_dir.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MAMNet single-image super-resolution engine"};
    app.require_subcommand(1);
    app.footer("The MAMSR_THREADS environment variable bounds worker parallelism.");

    ConfigFlags flags;
    uint64_t seed = 0;

    // train
    auto* train = app.add_subcommand("train", "Train a model on a folder of HR images");
    add_config_flags(train, flags);
    std::string tr_hr, tr_lr, tr_val, tr_out, tr_ckpt;
    mamsr_train_options topts;
    mamsr_train_options_default(&topts);
    bool no_augment = false;
    train->add_option("--hr-dir", tr_hr, "HR training images")->required();
    train->add_option("--lr-dir", tr_lr, "Paired LR images (default: built-in bicubic downscale)");
    train->add_option("--val-dir", tr_val, "Held-out HR images for validation PSNR");
    train->add_option("--out", tr_out, "Output directory (checkpoint + log)")->required();
    train->add_option("--ckpt", tr_ckpt, "Continue from an existing checkpoint");
    train->add_option("--iters", topts.iters, "Training iterations");
    train->add_option("--batch", topts.batch, "Mini-batch size");
    train->add_option("--patch", topts.patch, "LR patch size");
    train->add_option("--lr0", topts.lr0, "Initial learning rate");
    train->add_option("--halve-every", topts.halve_every, "Halve the learning rate every N iterations");
    train->add_option("--log-every", topts.log_every, "Logging interval");
    train->add_option("--ckpt-every", topts.ckpt_every, "Checkpoint interval");
    train->add_option("--val-every", topts.val_every, "Validation interval");
    train->add_flag("--no-augment", no_augment, "Disable flip/rotation augmentation");
    train->add_option("--seed", seed, "RNG seed");

    // sr
    auto* sr = app.add_subcommand("sr", "Super-resolve a PNG (or every PNG in a directory)");
    std::string sr_ckpt, sr_in, sr_out;
    int sr_scale = 0;
    sr->add_option("--ckpt", sr_ckpt, "Model checkpoint")->required();
    sr->add_option("--in", sr_in, "Input PNG file or directory")->required();
    sr->add_option("--out", sr_out, "Output PNG file or directory")->required();
    sr->add_option("--scale", sr_scale, "Expected scale (checked against the checkpoint)");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate PSNR/SSIM over a dataset folder");
    std::string ev_ckpt, ev_baseline, ev_hr, ev_lr, ev_csv = "eval_report.csv";
    int ev_scale = 2;
    int ev_shave = -1;
    bool ev_identity = false;
    eval->add_option("--ckpt", ev_ckpt, "Model checkpoint");
    eval->add_option("--baseline", ev_baseline, "Evaluate a baseline instead of a model")
        ->check(CLI::IsMember({"bicubic"}));
    eval->add_flag("--identity-check", ev_identity, "Score the ground truth against itself");
    eval->add_option("--hr-dir", ev_hr, "HR images")->required();
    eval->add_option("--lr-dir", ev_lr, "Paired LR images (default: built-in bicubic downscale)");
    eval->add_option("--scale", ev_scale, "Scale for baseline/identity runs")->check(CLI::IsMember({2, 3, 4}));
    eval->add_option("--shave", ev_shave, "Border pixels removed before metrics (default: scale)");
    eval->add_option("--csv", ev_csv, "CSV output path");

    // params
    auto* params = app.add_subcommand("params", "Print the exact parameter count for a configuration");
    ConfigFlags pflags;
    add_config_flags(params, pflags);

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Dump a block's modulation maps for an input image");
    std::string in_ckpt, in_img, in_out = "inspect_out";
    int in_block = 0;
    inspect->add_option("--ckpt", in_ckpt, "Model checkpoint")->required();
    inspect->add_option("--in", in_img, "Input PNG")->required();
    inspect->add_option("--block", in_block, "Block index (0-based)")->required();
    inspect->add_option("--out", in_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    if (train->parsed()) {
        return cmd_train(flags, tr_ckpt, tr_hr, tr_lr, tr_val, tr_out, topts, seed, no_augment);
    }
    if (sr->parsed()) return cmd_sr(sr_ckpt, sr_in, sr_out, sr_scale);
    if (eval->parsed()) return cmd_eval(ev_ckpt, ev_baseline, ev_identity, ev_hr, ev_lr, ev_scale, ev_shave, ev_csv);
    if (params->parsed()) return cmd_params(pflags);
    if (inspect->parsed()) return cmd_inspect(in_ckpt, in_img, in_block, in_out);
    return kExitConfig;
}

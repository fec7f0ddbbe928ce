#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/model.hpp"

namespace mamsr {

struct EvalOptions {
    std::string lr_dir;          // paired LR folder; empty -> built-in downscale
    int shave = -1;              // border removed before metrics; -1 -> scale
    bool baseline_bicubic = false; // score the bicubic upscaler instead of a model
    bool identity_check = false;   // score the ground truth against itself
};

struct EvalRow {
    std::string name;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct EvalReport {
    std::string dataset;
    int scale = 0;
    int shave = 0;
    std::vector<EvalRow> rows;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    std::vector<std::string> warnings;
};

// Per image: downscale (or read paired LR) -> mean-subtract -> forward ->
// re-add mean -> clip to [0,1] -> Y-channel PSNR/SSIM against the ground
// truth with the configured shave. model may be null only for the bicubic
// baseline or the identity check.
EvalReport evaluate(const Model<float>* model, const std::string& hr_dir, int scale,
                    const EvalOptions& opts = {});

std::string report_csv(const EvalReport& report);
std::string report_table(const EvalReport& report);

// model inference on one image (mean handling + clipping included)
Image super_resolve(const Model<float>& model, const Image& lr);

} // namespace mamsr

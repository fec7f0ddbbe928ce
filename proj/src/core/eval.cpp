#include "core/eval.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/parallel.hpp"

namespace fs = std::filesystem;

namespace mamsr {

Image super_resolve(const Model<float>& model, const Image& lr) {
    Tensor<float> in = tensor_from_image(lr);
    for (int c = 0; c < 3; ++c) {
        float* p = in.plane(0, c);
        for (std::int64_t i = 0; i < in.plane_size(); ++i) p[i] -= model.rgb_mean[std::size_t(c)];
    }
    Tensor<float> out = network_forward(in, model.params, model.cfg);
    for (int c = 0; c < 3; ++c) {
        float* p = out.plane(0, c);
        for (std::int64_t i = 0; i < out.plane_size(); ++i) p[i] += model.rgb_mean[std::size_t(c)];
    }
    return clip01(image_from_tensor(out, 0));
}

EvalReport evaluate(const Model<float>* model, const std::string& hr_dir, int scale,
                    const EvalOptions& opts) {
    check_arg(model || opts.baseline_bicubic || opts.identity_check,
              "evaluate: need a model, --baseline bicubic, or the identity check");
    if (model) {
        check_arg(model->cfg.scale == scale, "evaluate: model scale " + std::to_string(model->cfg.scale) +
                                                 " != requested scale " + std::to_string(scale));
    }

    EvalReport report;
    report.dataset = fs::path(hr_dir).filename().string();
    if (report.dataset.empty()) report.dataset = hr_dir;
    report.scale = scale;
    report.shave = opts.shave >= 0 ? opts.shave : scale;

    Dataset data = load_dataset(hr_dir, opts.lr_dir, scale, &report.warnings);
    check(!data.items.empty(), ErrorCode::not_found, "evaluate: no usable images in " + hr_dir);

    report.rows.resize(data.items.size());
    std::vector<std::string> errors(data.items.size());
    parallel_for_each(std::int64_t(data.items.size()), [&](std::int64_t i) {
        const auto& item = data.items[std::size_t(i)];
        EvalRow row;
        row.name = item.name;
        try {
            Image sr;
            if (opts.identity_check) {
                sr = item.hr;
            } else if (opts.baseline_bicubic) {
                sr = clip01(bicubic_resize(item.lr, item.hr.width, item.hr.height));
            } else {
                sr = super_resolve(*model, item.lr);
            }
            const YImage ya = rgb_to_y(sr);
            const YImage yb = rgb_to_y(item.hr);
            row.psnr_db = psnr(ya, yb, report.shave);
            row.ssim = ssim(ya, yb, report.shave);
        } catch (const std::exception& e) {
            errors[std::size_t(i)] = item.name + ": " + e.what();
        }
        report.rows[std::size_t(i)] = row;
    });

    // drop failed rows, in order, recording why
    std::vector<EvalRow> kept;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        if (!errors[i].empty()) {
            report.warnings.push_back(errors[i] + " (skipped)");
            continue;
        }
        kept.push_back(report.rows[i]);
    }
    report.rows = std::move(kept);
    check(!report.rows.empty(), ErrorCode::not_found, "evaluate: every image failed");

    double psum = 0.0, ssum = 0.0;
    for (const auto& row : report.rows) {
        psum += row.psnr_db;
        ssum += row.ssim;
    }
    report.mean_psnr = psum / double(report.rows.size());
    report.mean_ssim = ssum / double(report.rows.size());
    return report;
}

namespace {

std::string fmt_psnr(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string fmt_ssim(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

std::string report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "name,psnr_db,ssim\n";
    for (const auto& row : report.rows) {
        out << row.name << "," << fmt_psnr(row.psnr_db) << "," << fmt_ssim(row.ssim) << "\n";
    }
    out << "mean," << fmt_psnr(report.mean_psnr) << "," << fmt_ssim(report.mean_ssim) << "\n";
    return out.str();
}

std::string report_table(const EvalReport& report) {
    std::ostringstream out;
    out << "dataset: " << report.dataset << "  scale: x" << report.scale << "  shave: " << report.shave
        << "\n";
    std::size_t name_w = 4;
    for (const auto& row : report.rows) name_w = std::max(name_w, row.name.size());
    out << std::string(name_w - 4, ' ') << "name  " << "  psnr_db" << "      ssim" << "\n";
    for (const auto& row : report.rows) {
        out << std::string(name_w - row.name.size(), ' ') << row.name << "  ";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%9s  %8s", fmt_psnr(row.psnr_db).c_str(),
                      fmt_ssim(row.ssim).c_str());
        out << buf << "\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%9s  %8s", fmt_psnr(report.mean_psnr).c_str(),
                  fmt_ssim(report.mean_ssim).c_str());
    out << std::string(name_w - 4, ' ') << "mean  " << buf << "\n";
    for (const auto& w : report.warnings) out << "warning: " << w << "\n";
    return out.str();
}

} // namespace mamsr

#include "core/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/checkpoint.hpp"
#include "core/loss.hpp"
#include "core/metrics.hpp"

namespace fs = std::filesystem;

namespace mamsr {

std::string train_log_line(const TrainLogRecord& rec) {
    char buf[128];
    if (rec.has_val) {
        std::snprintf(buf, sizeof(buf), "%lld,%.8g,%.8g,%.4f", (long long)rec.iter, rec.lr, rec.loss,
                      rec.val_psnr);
    } else {
        std::snprintf(buf, sizeof(buf), "%lld,%.8g,%.8g", (long long)rec.iter, rec.lr, rec.loss);
    }
    return buf;
}

double validation_psnr(const Model<float>& model, const Dataset& data) {
    check_arg(!data.items.empty(), "validation_psnr: empty dataset");
    double total = 0.0;
    for (const auto& item : data.items) {
        Tensor<float> in = tensor_from_image(item.lr);
        for (int c = 0; c < 3; ++c) {
            float* p = in.plane(0, c);
            for (std::int64_t i = 0; i < in.plane_size(); ++i) p[i] -= model.rgb_mean[std::size_t(c)];
        }
        Tensor<float> out = network_forward(in, model.params, model.cfg);
        for (int c = 0; c < 3; ++c) {
            float* p = out.plane(0, c);
            for (std::int64_t i = 0; i < out.plane_size(); ++i) p[i] += model.rgb_mean[std::size_t(c)];
        }
        const Image sr = clip01(image_from_tensor(out, 0));
        total += psnr(rgb_to_y(sr), rgb_to_y(item.hr), model.cfg.scale);
    }
    return total / double(data.items.size());
}

namespace {

void write_checkpoint_atomic(const Model<float>& model, const std::string& out_dir) {
    const fs::path final_path = fs::path(out_dir) / "model.mamn";
    const fs::path tmp_path = fs::path(out_dir) / "model.mamn.tmp";
    save_checkpoint(model, tmp_path.string());
    fs::rename(tmp_path, final_path);
}

} // namespace

TrainResult train(Model<float>& model, const Dataset& data, const TrainConfig& cfg,
                  const Dataset* val_data, const std::string& out_dir, const TrainHooks& hooks) {
    check_arg(!data.items.empty(), "train: empty dataset");
    check_arg(cfg.max_iters >= 1, "train: max_iters must be >= 1");
    check_arg(cfg.log_every >= 1, "train: log_every must be >= 1");
    check_arg(cfg.batch >= 1 && cfg.patch_lr >= 1, "train: bad batch/patch size");
    check_arg(data.scale == model.cfg.scale, "train: dataset scale differs from model scale");
    for (const auto& item : data.items) {
        check_arg(item.lr.width >= cfg.patch_lr && item.lr.height >= cfg.patch_lr,
                  "train: image smaller than patch: " + item.name);
    }

    model.rgb_mean = lr_rgb_mean(data);

    std::ofstream log;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        log.open((fs::path(out_dir) / "train_log.csv").string(), std::ios::trunc);
        check(log.good(), ErrorCode::io, "train: cannot open log file in " + out_dir);
    }

    Rng rng(cfg.seed);
    AdamState<float> state = AdamState<float>::zeros(model.cfg);
    ModelParams<float> grads = alloc_params<float>(model.cfg);

    TrainResult result;
    auto emit = [&](const TrainLogRecord& rec) {
        if (log.is_open()) log << train_log_line(rec) << "\n" << std::flush;
        if (hooks.on_log) hooks.on_log(rec);
    };

    for (std::int64_t t = 0; t < cfg.max_iters; ++t) {
        const double lr = lr_at(t, cfg.lr0, cfg.halve_every);

        Tensor<float> lr_batch, hr_batch;
        sample_batch(data, cfg.patch_lr, cfg.batch, model.rgb_mean, rng, cfg.augment, &lr_batch,
                     &hr_batch);

        NetworkCache<float> cache;
        Tensor<float> pred = network_forward(lr_batch, model.params, model.cfg, &cache);
        Tensor<float> grad_pred(pred.n, pred.c, pred.h, pred.w);
        const double loss = l1_loss(pred, hr_batch, &grad_pred);

        if (t == 0) result.initial_loss = loss;
        result.final_loss = loss;

        if (!std::isfinite(loss)) {
            result.aborted = true;
            result.abort_reason = "non-finite loss at iteration " + std::to_string(t);
            result.iters_run = t;
            return result;
        }

        // zero and refill gradient buffers
        visit_params(grads, [](const std::string&, const std::vector<int>&, std::vector<float>& vals) {
            std::fill(vals.begin(), vals.end(), 0.f);
        });
        network_backward(model.params, model.cfg, cache, grad_pred, grads);

        try {
            adam_step(model.params, grads, state, lr, cfg.adam);
        } catch (const Error& e) {
            result.aborted = true;
            result.abort_reason = std::string(e.what()) + " at iteration " + std::to_string(t);
            result.iters_run = t;
            return result;
        }

        const bool last = t == cfg.max_iters - 1;
        if (t % cfg.log_every == 0 || last) {
            TrainLogRecord rec;
            rec.iter = t;
            rec.lr = lr;
            rec.loss = loss;
            if (val_data && !val_data->items.empty() &&
                ((cfg.val_every > 0 && t > 0 && t % cfg.val_every == 0) || last)) {
                rec.has_val = true;
                rec.val_psnr = validation_psnr(model, *val_data);
            }
            emit(rec);
        }
        if (!out_dir.empty() && (last || (cfg.ckpt_every > 0 && t > 0 && t % cfg.ckpt_every == 0))) {
            write_checkpoint_atomic(model, out_dir);
        }
        result.iters_run = t + 1;
    }
    return result;
}

} // namespace mamsr

#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "core/adam.hpp"
#include "core/dataset.hpp"
#include "core/model.hpp"

namespace mamsr {

struct TrainConfig {
    int batch = 16;
    int patch_lr = 48;
    double lr0 = 1e-4;
    std::int64_t halve_every = 200000;
    AdamConfig adam;
    std::int64_t max_iters = 0;
    std::uint64_t seed = 0;
    bool augment = true;
    int log_every = 100;
    int ckpt_every = 10000;
    int val_every = 10000;
};

struct TrainLogRecord {
    std::int64_t iter = 0;
    double lr = 0.0;
    double loss = 0.0;
    bool has_val = false;
    double val_psnr = 0.0;
};

struct TrainHooks {
    std::function<void(const TrainLogRecord&)> on_log;
};

struct TrainResult {
    std::int64_t iters_run = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

// formats a record as the log line: iter,lr,l1_loss[,val_psnr]
std::string train_log_line(const TrainLogRecord& rec);

// mean Y-channel PSNR of the model over a dataset held in memory
double validation_psnr(const Model<float>& model, const Dataset& data);

// Runs max_iters steps of sample -> forward -> L1 -> backward -> Adam with
// the halving learning-rate schedule. Computes the training-set RGB mean into
// model.rgb_mean before the first step. When out_dir is non-empty, writes
// train_log.csv and model.mamn there (checkpoint every ckpt_every iterations
// and at the end). A non-finite loss or gradient aborts and keeps the last
// checkpoint on disk.
TrainResult train(Model<float>& model, const Dataset& data, const TrainConfig& cfg,
                  const Dataset* val_data = nullptr, const std::string& out_dir = {},
                  const TrainHooks& hooks = {});

} // namespace mamsr

#pragma once

#include <cstdint>
#include <vector>

#include "bwf/model.hpp"

namespace bwf::nn {

/// Training knobs. Loss is fixed to MAE, averaged over the three branches.
struct TrainConfig {
    std::int64_t batch_size = 12;
    std::int64_t max_epochs = 30;
    double learning_rate = 1e-3;
    std::int64_t early_stop_patience = 5;
    double noise_augment_sigma = 0.0; // per-batch Gaussian noise on inputs
    std::uint64_t seed = 0;

    void validate() const {
        if (batch_size < 1) fail(ErrorCode::BadConfig, "batch_size must be >= 1");
        if (max_epochs < 0) fail(ErrorCode::BadConfig, "max_epochs must be >= 0");
        if (early_stop_patience < 1) fail(ErrorCode::BadConfig, "patience must be >= 1");
        if (!(learning_rate >= 0.0) || noise_augment_sigma < 0.0)
            fail(ErrorCode::BadConfig, "negative rate or noise");
    }
};

struct TrainReport {
    std::vector<double> train_loss; // one entry per completed epoch
    std::vector<double> val_loss;
    std::int64_t stopped_epoch = 0; // 1-based epoch training ended on
    std::int64_t best_epoch = 0;    // 1-based epoch of best_val_loss
    double best_val_loss = 0.0;
    bool diverged = false; // non-finite loss aborted training
    TargetMetrics val_metrics;
};

/// Mini-batch training with an adaptive-moment update (beta1 0.9, beta2
/// 0.999, eps 1e-8) on the mean-of-branches MAE. Stops when validation loss
/// has not improved for `early_stop_patience` epochs and restores the weights
/// of the best validation epoch. Targets are (depth, kd, i_ref). Waveforms
/// must already be padded/normalized to the model input length.
TrainReport train(Model& m, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg);

} // namespace bwf::nn

#pragma once

#include <span>
#include <string>

#include "bwf/invert.hpp"
#include "bwf/model.hpp"
#include "bwf/train.hpp"

namespace bwf::io {

/// 17-significant-digit decimal rendering used by every CSV export.
std::string format_float(double x);

/// Header "target,mae,rmse,r2" and one row each for depth, kd, bottom. The
/// r2 cell is empty when the statistic is undefined (constant truth).
void export_metrics_csv(const nn::TargetMetrics& metrics, const std::string& path);

/// Header "epoch,train_loss,val_loss" with epochs ascending from 1. The two
/// curves must have one entry per completed epoch.
void export_curves_csv(std::span<const double> train_loss,
                       std::span<const double> val_loss, const std::string& path);

/// Header "depth,log_intensity", one row per extracted pair.
void export_scatter_csv(std::span<const inv::DepthIntensityPair> pairs,
                        const std::string& path);

/// Header "index,depth,kd,bottom", one row per prediction.
void export_predictions_csv(std::span<const nn::Prediction> predictions,
                            const std::string& path);

/// Header "index,depth,depth_true", one row per classically inverted
/// waveform (indices refer to the source dataset; unresolvable waveforms are
/// absent).
struct DepthRow {
    std::size_t index = 0;
    double depth = 0.0;
    double depth_true = 0.0;
};
void export_depths_csv(std::span<const DepthRow> rows, const std::string& path);

} // namespace bwf::io

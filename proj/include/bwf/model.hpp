#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bwf/core.hpp"
#include "bwf/layers.hpp"

namespace bwf::nn {

/// Tri-branch regressor configuration. Each branch runs
/// [conv-batchnorm-relu] * convs_per_branch with a maxpool after every
/// pool_every-th conv block, then flatten, dense(dense_units)+relu, dense(1).
struct ModelConfig {
    std::int64_t convs_per_branch = 18;
    std::int64_t pool_every = 2;
    std::int64_t kernel_size = 7;
    std::vector<std::int64_t> filters; // one entry per conv
    std::int64_t dense_units = 256;
    std::int64_t input_len = 512;
    static constexpr std::int64_t branches = 3; // depth, kd, bottom reflectance

    std::int64_t pool_count() const { return convs_per_branch / pool_every; }
    std::int64_t flat_length() const; // length after all pooling
    void validate() const;
};

struct Branch {
    std::vector<Layer> layers;
};

struct Model {
    ModelConfig cfg;
    std::vector<Branch> branches; // size 3: depth, kd, bottom
    std::uint64_t init_seed = 0;
};

/// Builds the three branches with fan-in-scaled uniform initialization
/// (limit sqrt(6/fan_in)), deterministic per (seed, branch, layer).
Model build_tribranch(const ModelConfig& cfg, std::uint64_t seed);

struct ParamCounts {
    std::int64_t total = 0;
    std::int64_t trainable = 0;
    std::int64_t non_trainable = 0; // batch-norm running statistics
};

ParamCounts count_params(const Model& m);

struct Prediction {
    double depth = 0.0;
    double kd = 0.0;
    double bottom = 0.0;
};

/// Packs waveforms (already padded/normalized to the model input length) into
/// a (batch, input_len, 1) tensor.
Tensor pack_waveforms(std::span<const Waveform> waveforms, std::int64_t input_len);

/// Canonical model preprocessing: zero-pad to `length`, then peak-normalize.
/// Idempotent, so feeding already-preprocessed data is harmless.
std::vector<Waveform> preprocess_waveforms(std::span<const Waveform> waveforms,
                                           std::int64_t length);

/// preprocess_waveforms applied to every sample; labels are untouched.
Dataset preprocess_dataset(const Dataset& ds, std::int64_t length);

/// Infer-mode forward of one branch.
Tensor branch_infer(const Branch& branch, const Tensor& x);

/// Infer-mode predictions; deterministic, rows independent of batch grouping.
std::vector<Prediction> predict(const Model& m, std::span<const Waveform> waveforms,
                                std::int64_t batch_size = 256);

struct TargetMetrics {
    Metrics depth;
    Metrics kd;
    Metrics bottom;
};

/// Metrics of predictions against each sample's (depth, kd, i_ref) labels.
TargetMetrics evaluate_predictions(std::span<const Prediction> preds,
                                   std::span<const LabeledSample> samples);

/// predict + evaluate_predictions over a labeled dataset.
TargetMetrics evaluate(const Model& m, const Dataset& ds);

} // namespace bwf::nn

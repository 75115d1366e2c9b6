#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bwf/model.hpp"
#include "bwf/train.hpp"
#include "bwf/transport.hpp"

namespace bwf::adapt {

struct AdaptConfig {
    double epsilon_scale = 0.01;       // epsilon = scale * median(cost matrix)
    double tol = 1e-9;                 // sinkhorn marginal tolerance
    std::int64_t max_iter = 10000;     // sinkhorn iteration cap
    std::int64_t subsample_cap = 5000; // per-side size cap on the OT problem
    std::uint64_t seed = 0;            // subsampling draws

    void validate() const;
};

struct AdaptResult {
    // one prediction per adapted target sample, aligned with target_indices
    std::vector<nn::Prediction> predictions;
    std::vector<std::size_t> target_indices; // targets that entered the OT problem
    std::vector<std::size_t> source_indices; // source subsample used
    std::optional<nn::TargetMetrics> metrics; // present when labels were given
    double epsilon = 0.0;
    std::int64_t sinkhorn_iterations = 0;
    double sinkhorn_violation = 0.0;
    bool sinkhorn_converged = false;
    bool used_log_domain = false;
};

/// Pure data-side domain adaptation: zero-pad + peak-normalize both sets,
/// build the squared-distance cost between them, solve entropic transport
/// with uniform marginals, map each target onto its plan-weighted source
/// barycenter, and run the (unmodified) model on the mapped waveforms. Sides
/// larger than subsample_cap are subsampled with the config seed; the indices
/// actually used are reported.
AdaptResult adapt_and_predict(const nn::Model& m, std::span<const Waveform> target,
                              std::span<const Waveform> source,
                              const AdaptConfig& cfg);

/// Same pipeline on labeled sets; metrics of the adapted predictions against
/// the (subsampled) target labels are filled in.
AdaptResult adapt_and_predict(const nn::Model& m,
                              std::span<const LabeledSample> target,
                              std::span<const LabeledSample> source,
                              const AdaptConfig& cfg);

struct FineTuneResult {
    nn::Model model;
    nn::TrainReport report;
};

/// Continues training a copy of the model on a small labeled target set at
/// `lr_scale` times the configured learning rate (default one tenth); the
/// input model is untouched. Waveforms are preprocessed internally. The set
/// is split 85/15 into train/holdout with the train seed; a single-sample
/// set trains and validates on that one sample. Zero max_epochs returns the
/// copy bitwise unchanged.
FineTuneResult fine_tune(const nn::Model& m, const Dataset& labeled_target,
                         const nn::TrainConfig& cfg, double lr_scale = 0.1);

} // namespace bwf::adapt

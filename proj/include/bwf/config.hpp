#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "bwf/adapt.hpp"
#include "bwf/core.hpp"
#include "bwf/model.hpp"
#include "bwf/simulate.hpp"
#include "bwf/train.hpp"

namespace bwf::io {

struct SplitSettings {
    std::array<double, 3> ratios{0.8, 0.15, 0.05}; // train, val, test
    std::uint64_t seed = 1;
};

struct InvertSettings {
    double min_prominence_frac = 0.01; // of each waveform's maximum
    double pulse_width_hint = 0.0;     // seconds, 0 = none
};

struct FinetuneSettings {
    double fraction = 0.1; // labeled share of the target set
    double lr_scale = 0.1;
    std::uint64_t seed = 1; // subset draw
};

/// Everything a CLI run needs, loadable from a JSON file (see the README for
/// the schema; every key is optional and falls back to these defaults).
/// Unknown keys, wrong types and out-of-bounds values raise ConfigError
/// naming the offending dotted key.
struct RunConfig {
    std::int64_t n_samples = 1000;
    std::uint64_t seed = 1; // dataset generation
    int workers = 0;        // 0 = BWF_THREADS env or 1

    TimeGrid grid;
    sim::ParamRanges ranges;
    // generate-shifted settings: skewed pulse, raised background, stretched
    // time axis, extra noise
    sim::ShiftConfig shift{1, 0.05, 1.1, 0.1};
    // desk-scale tri-branch model
    nn::ModelConfig model{10, 2, 5, {8, 8, 12, 12, 16, 16, 24, 24, 32, 32}, 64, 512};
    nn::TrainConfig train{32, 30, 1e-3, 5, 0.0, 1};
    adapt::AdaptConfig adapt{0.01, 1e-9, 10000, 5000, 1};
    SplitSettings split;
    InvertSettings invert;
    FinetuneSettings finetune;

    // file roles (in, out, model, model_out, metrics_csv, curves_csv,
    // scatter_csv, predictions_csv, source, target); flags override these
    std::map<std::string, std::string> paths;

    /// Full bounds check; non-empty paths must be pairwise distinct.
    void validate() const;
};

/// Defaults above plus the documented desk-scale model/shift settings.
RunConfig default_run_config();

/// Parses a JSON object into a RunConfig (absent keys keep defaults).
RunConfig parse_run_config(const std::string& json_text);

/// parse_run_config over a file's contents.
RunConfig load_run_config(const std::string& path);

} // namespace bwf::io

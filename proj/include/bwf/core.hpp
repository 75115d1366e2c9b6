#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bwf/errors.hpp"

namespace bwf {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, vacuum
inline constexpr double kWaterRefractiveIndex = 1.33;

/// Uniform sampling grid shared by every waveform in a dataset.
struct TimeGrid {
    std::int32_t n_bins = 512;
    double dt = 1e-9;  // seconds per bin
    double t0 = 0.0;   // time of bin 0, seconds

    double time(std::int64_t bin) const { return t0 + static_cast<double>(bin) * dt; }

    bool operator==(const TimeGrid&) const = default;

    void validate() const {
        if (n_bins <= 0 || !(dt > 0.0))
            fail(ErrorCode::InvalidParams, "time grid needs n_bins > 0 and dt > 0");
    }
};

/// Digitized return. Samples are stored as float32 (the native record width);
/// all arithmetic on them is done in double.
struct Waveform {
    TimeGrid grid;
    std::vector<float> samples;

    void validate() const {
        grid.validate();
        if (samples.size() != static_cast<std::size_t>(grid.n_bins))
            fail(ErrorCode::LengthMismatch, "sample count does not match grid");
    }
};

/// Ground-truth generator parameters attached to each simulated waveform.
struct WaveformParams {
    double depth = 1.0;           // water depth, m
    double kd = 0.1;              // diffuse attenuation, 1/m
    double i_ref = 10.0;          // bottom reflectance intensity factor
    double i_w = 0.5;             // water column backscatter intensity factor
    double i_s = 2.0;             // surface return intensity factor
    double amplitude = 1.0;       // overall gain A
    double noise_sigma = 0.0;     // additive Gaussian noise, absolute units
    double base_intensity = 0.0;  // constant background offset
    double w_c = 1.0;             // pulse width scale (sigma = w_c * 10 ns)
    std::int64_t imp_type = 0;    // 0 gaussian, 1 gumbel, 2 frechet
    double max_depth = 20.0;      // deepest bottom the grid must hold, m
};

struct LabeledSample {
    Waveform waveform;
    WaveformParams params;
};

enum class SplitTag : std::uint8_t { Unsplit = 0, Train = 1, Val = 2, Test = 3 };

struct Dataset {
    TimeGrid grid;
    std::vector<LabeledSample> samples;
    std::uint64_t seed = 0;
    SplitTag split_tag = SplitTag::Unsplit;

    std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }
};

/// Regression quality summary. r2 is absent when the truth vector is constant
/// (the statistic is undefined there), never NaN.
struct Metrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> r2;
};

/// Pads with trailing zeros up to target_len; the grid keeps dt/t0 and grows
/// to target_len bins. Throws LengthExceedsTarget if the input is longer.
Waveform zero_pad(const Waveform& w, std::int32_t target_len);

/// Scales so the maximum sample equals exactly 1.0f; argmax is unchanged and
/// the operation is idempotent. Throws DegenerateWaveform when max <= 0 or
/// any sample is non-finite.
Waveform normalize_peak(const Waveform& w);

/// Adds i.i.d. Gaussian noise with the given absolute sigma. sigma == 0
/// returns a bitwise copy without consuming randomness.
Waveform add_noise(const Waveform& w, double sigma, std::uint64_t seed);

struct SplitSizes {
    std::int64_t n_train = 0;
    std::int64_t n_val = 0;
    std::int64_t n_test = 0;
};

/// floor(n * ratio) per split, remainder assigned to train. Ratios must be
/// nonnegative and sum to 1 within 1e-9.
SplitSizes split_sizes(std::int64_t n, const std::array<double, 3>& ratios);

/// Deterministic seeded shuffle, then contiguous train/val/test slices of the
/// shuffled order. Every input sample lands in exactly one output.
std::array<Dataset, 3> split_dataset(const Dataset& ds,
                                     const std::array<double, 3>& ratios,
                                     std::uint64_t seed);

/// MAE, RMSE and r-squared between predictions and truths.
Metrics compute_metrics(std::span<const double> predictions,
                        std::span<const double> truths);

/// One-way distance from a two-way travel time through a medium:
/// d = (c / n) * delta_t / 2. Throws NegativeTime / InvalidParams.
double time_of_flight_distance(double delta_t, double refractive_index);

} // namespace bwf

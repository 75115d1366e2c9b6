#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bwf/core.hpp"
#include "bwf/simulate.hpp"

namespace bwf::inv {

struct Peak {
    std::int32_t index = 0;   // bin of the (leftmost) maximum sample
    double time = 0.0;        // grid time of that bin, seconds
    double height = 0.0;      // sample value
    double prominence = 0.0;  // height minus the lower flanking valley
};

/// Local maxima (plateaus count once, at their leftmost bin) with prominence
/// >= min_prominence, sorted by index. Prominence is measured against the
/// lower of the two flanking valleys, where each valley is the minimum sample
/// between the peak and the nearest sample at or above its height (or the
/// waveform edge). Edge bins are never peaks.
std::vector<Peak> detect_peaks(const Waveform& w, double min_prominence);

/// Two-echo time-of-flight depth: distance between the first two detected
/// peaks via time_of_flight_distance. pulse_width_hint (seconds, 0 = none)
/// states the expected transmit pulse width: with a hint, a single detected
/// peak is classified as merged echoes (PeaksUnresolved) and two peaks closer
/// than the hint are rejected as unresolved; without a hint the first peak's
/// measured full width at half maximum is used as the separation floor and a
/// single peak reports NoBottomEcho.
double depth_from_waveform(const Waveform& w, double n_w, double min_prominence,
                           double pulse_width_hint = 0.0);

/// Cartesian-product lookup table axes. Entries are simulated noiselessly
/// from `base` with depth/kd/i_ref overridden per grid point, then
/// peak-normalized. Entry order: depth outermost, then kd, then i_ref.
struct LutAxes {
    std::vector<double> depths;
    std::vector<double> kds;
    std::vector<double> i_refs;
    WaveformParams base;
    std::size_t max_entries = 100000;
};

struct LutEntry {
    WaveformParams params;
    Waveform waveform; // peak-normalized
};

struct Lut {
    TimeGrid grid;
    std::vector<LutEntry> entries;
};

Lut build_lut(const LutAxes& axes, const TimeGrid& grid);

struct LutMatch {
    WaveformParams params;
    double merit = 0.0;
    std::size_t index = 0;
};

/// Peak-normalizes w_ref, then returns the entry minimizing the squared
/// residual sum (ties broken by lowest entry index).
LutMatch lut_invert(const Waveform& w_ref, const Lut& lut);

struct DepthIntensityPair {
    double depth = 0.0;
    double log_intensity = 0.0; // ln of the raw bottom-peak height
};

struct SkippedWaveform {
    std::size_t index = 0;
    ErrorCode reason = ErrorCode::NoBottomEcho;
};

struct PairExtraction {
    std::vector<DepthIntensityPair> pairs;
    std::vector<SkippedWaveform> skipped;
};

/// Per waveform: depth via depth_from_waveform and the natural log of the raw
/// (un-normalized) bottom-peak height. Waveforms failing with NoBottomEcho or
/// PeaksUnresolved are skipped and reported. min_prominence_frac scales the
/// peak-detection threshold by each waveform's maximum sample.
PairExtraction log_intensity_depth_pairs(std::span<const Waveform> waveforms,
                                         double n_w,
                                         double min_prominence_frac = 0.01,
                                         double pulse_width_hint = 0.0);

struct AttenuationFit {
    double kd_hat = 0.0;    // |slope| of the log-intensity vs depth fit
    double slope = 0.0;     // signed OLS slope
    double intercept = 0.0; // log-intensity at depth 0
    double r2 = 0.0;
    std::size_t n_points = 0;
};

/// Ordinary least squares of log_intensity on depth; the attenuation
/// coefficient is reported as the magnitude of the slope. Note that under the
/// two-way attenuation model the fitted |slope| equals 2*kd of the water, so
/// kd_water = kd_hat / 2 for simulated data.
AttenuationFit fit_attenuation(std::span<const DepthIntensityPair> points);

} // namespace bwf::inv

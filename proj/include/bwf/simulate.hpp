#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bwf/core.hpp"

namespace bwf::sim {

/// Bin index of the air-water interface return on the (effective) time axis.
inline constexpr int kSurfaceBin = 64;

/// Reference pulse width: w_c is a fraction of this, so the effective pulse
/// std is w_c * 10 ns.
inline constexpr double kReferencePulseWidth = 10e-9;

/// Transmit pulse family, re-parameterized so every family has a unit peak at
/// its mode and standard deviation w_c * 10 ns:
///   0 — symmetric bell (Gaussian)
///   1 — right-skewed extreme-value (Gumbel)
///   2 — heavy-tailed extreme-value type II (Frechet, alpha = 3)
struct PulseShape {
    std::int64_t imp_type = 0;
    double w_c = 1.0;

    double sigma_seconds() const { return w_c * kReferencePulseWidth; }

    void validate() const {
        if (imp_type < 0 || imp_type > 2)
            fail(ErrorCode::InvalidParams, "imp_type must be 0, 1 or 2");
        if (!(w_c > 0.0)) fail(ErrorCode::InvalidParams, "w_c must be > 0");
    }
};

/// Unit-peak pulse value at offset t (seconds) from the mode.
double pulse_value(const PulseShape& shape, double t);

/// Deliberate instrument changes used to emulate data from a different
/// simulator. Labels are never altered by the shift.
struct ShiftConfig {
    std::optional<std::int64_t> pulse_substitution; // replaces imp_type
    double background_offset = 0.0;                 // added to every sample
    double stretch = 1.0;                           // time-axis scale (> 0)
    double extra_noise = 0.0;                       // additional Gaussian std

    bool is_identity() const {
        return !pulse_substitution && background_offset == 0.0 && stretch == 1.0 &&
               extra_noise == 0.0;
    }

    void validate() const {
        if (!(stretch > 0.0)) fail(ErrorCode::InvalidParams, "stretch must be > 0");
        if (background_offset < 0.0)
            fail(ErrorCode::InvalidParams, "background_offset must be >= 0");
        if (extra_noise < 0.0) fail(ErrorCode::InvalidParams, "extra_noise must be >= 0");
        if (pulse_substitution)
            PulseShape{*pulse_substitution, 1.0}.validate();
    }
};

/// Noiseless additive decomposition of a simulated waveform; all parts are in
/// final intensity units (already scaled by amplitude), so
/// surface + column + bottom + background reproduces the noise-free samples.
struct WaveformComponents {
    std::vector<double> surface;
    std::vector<double> column;
    std::vector<double> bottom;
    double background = 0.0;
};

void validate_params(const WaveformParams& p);

/// Received power model: surface echo at the fixed surface bin, exponentially
/// attenuated water-column backscatter on the open interval between surface
/// and bottom times, bottom echo attenuated by exp(-2*kd*depth), constant
/// background, additive Gaussian noise drawn from seed:
///   samples(t) = A*[ i_s*g(t - t_s) + column(t) + i_ref*exp(-2*kd*depth)*g(t - t_b) ]
///                + base_intensity + noise
///   t_b = t_s + 2*depth*n_w/c,  column(t) = i_w*exp(-2*kd*z(t)) on (t_s, t_b),
///   z(t) = (t - t_s)*c/(2*n_w),  n_w = 1.33.
Waveform simulate_waveform(const WaveformParams& p, const TimeGrid& grid,
                           std::uint64_t seed);

/// Same model with a ShiftConfig applied (used by generate_shifted_dataset).
/// The shift stretches the effective time axis (dt_eff = dt / stretch, surface
/// stays at the surface bin), optionally substitutes the pulse family, adds a
/// constant offset and extra noise (from extra_seed).
Waveform simulate_waveform_shifted(const WaveformParams& p, const TimeGrid& grid,
                                   const ShiftConfig& shift, std::uint64_t seed,
                                   std::uint64_t extra_seed);

/// Noise-free component decomposition under a shift (identity by default).
WaveformComponents simulate_components(const WaveformParams& p, const TimeGrid& grid,
                                       const ShiftConfig& shift = ShiftConfig{});

/// Inclusive sampling bounds for one physical parameter.
struct ParamRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Per-field sampling ranges. Defaults follow the simulator's documented
/// parameter table; noise is parameterized as a fraction of amplitude
/// (noise_sigma = frac * A with frac uniform in noise_frac).
struct ParamRanges {
    ParamRange depth{0.15, 19.0};
    ParamRange kd{0.0, 1.0};
    ParamRange i_ref{1.0, 100.0};
    ParamRange i_w{0.0, 2.0};
    ParamRange i_s{1.0, 10.0};
    ParamRange amplitude{1.0, 10.0};
    ParamRange noise_frac{0.0, 0.04};
    ParamRange base_intensity{0.0, 0.2};
    ParamRange w_c{0.1, 1.0};
    double max_depth = 20.0;

    void validate() const;
};

/// Uniform draw per field in a fixed documented order (depth, kd, i_ref, i_w,
/// i_s, amplitude, noise fraction after amplitude, base_intensity, w_c,
/// imp_type uniform over {0,1,2}).
WaveformParams sample_params(const ParamRanges& ranges, std::uint64_t seed);

/// n labeled samples; sample i uses the child seed derive_stream(seed, i), so
/// generation may fan out across workers with byte-identical results for any
/// worker count. workers <= 0 resolves to the BWF_THREADS environment
/// variable, defaulting to 1.
Dataset generate_dataset(std::int64_t n, const ParamRanges& ranges,
                         const TimeGrid& grid, std::uint64_t seed, int workers = 0);

/// As generate_dataset but every waveform passes through the ShiftConfig;
/// labels remain the true sampled parameters.
Dataset generate_shifted_dataset(std::int64_t n, const ParamRanges& ranges,
                                 const TimeGrid& grid, const ShiftConfig& shift,
                                 std::uint64_t seed, int workers = 0);

/// Two-way travel time of the bottom echo relative to the surface echo.
inline double bottom_echo_delay(double depth) {
    return 2.0 * depth * kWaterRefractiveIndex / kSpeedOfLight;
}

/// Classical time-of-flight inversion is only bin-accurate when the two
/// echoes are cleanly separated, the bottom echo is visible, and the column
/// pedestal cannot displace either echo's argmax bin. This predicate defines
/// that regime (used by round-trip property tests).
bool tof_resolvable(const WaveformParams& p, const TimeGrid& grid);

} // namespace bwf::sim

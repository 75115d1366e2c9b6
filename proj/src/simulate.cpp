#include "bwf/simulate.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bwf/rng.hpp"

namespace bwf::sim {

namespace {

constexpr double kFwhmPerSigma = 2.3548200450309493; // 2*sqrt(2*ln 2)

// Frechet (type II extreme value) with alpha = 3: std/scale ratio
// sqrt(Gamma(1/3) - Gamma(2/3)^2) and mode/scale ratio (3/4)^(1/3).
constexpr double kFrechetStdPerScale = 0.9194036955077509;
constexpr double kFrechetModePerScale = 0.9085602964160698;

double gaussian_pulse(double t, double sigma) {
    const double z = t / sigma;
    return std::exp(-0.5 * z * z);
}

double gumbel_pulse(double t, double sigma) {
    // mode at 0; std = beta*pi/sqrt(6) => beta = sigma*sqrt(6)/pi
    const double beta = sigma * std::sqrt(6.0) / M_PI;
    const double z = t / beta;
    // density ratio f(mode + t)/f(mode) = exp(-(z + e^-z) + 1)
    const double e = -z - std::exp(-z) + 1.0;
    return e < -745.0 ? 0.0 : std::exp(e);
}

double frechet_pulse(double t, double sigma) {
    const double lambda = sigma / kFrechetStdPerScale;
    const double u = kFrechetModePerScale + t / lambda; // (x_m + t)/lambda
    if (u <= 0.0) return 0.0;
    const double um = kFrechetModePerScale;
    // density ratio (u/um)^-4 * exp(um^-3 - u^-3)
    const double loge = -4.0 * std::log(u / um) + (1.0 / (um * um * um) - 1.0 / (u * u * u));
    return loge < -745.0 ? 0.0 : std::exp(loge);
}

} // namespace

double pulse_value(const PulseShape& shape, double t) {
    shape.validate();
    const double sigma = shape.sigma_seconds();
    switch (shape.imp_type) {
    case 0: return gaussian_pulse(t, sigma);
    case 1: return gumbel_pulse(t, sigma);
    default: return frechet_pulse(t, sigma);
    }
}

void validate_params(const WaveformParams& p) {
    const double fields[] = {p.depth, p.kd,          p.i_ref,          p.i_w,
                             p.i_s,   p.amplitude,   p.noise_sigma,    p.base_intensity,
                             p.w_c,   p.max_depth,   double(p.imp_type)};
    for (double f : fields)
        if (!std::isfinite(f)) fail(ErrorCode::InvalidParams, "non-finite parameter");
    if (!(p.depth > 0.0)) fail(ErrorCode::InvalidParams, "depth must be > 0");
    if (p.depth > p.max_depth) fail(ErrorCode::InvalidParams, "depth exceeds max_depth");
    if (p.kd < 0.0) fail(ErrorCode::InvalidParams, "kd must be >= 0");
    if (p.i_ref < 0.0 || p.i_w < 0.0 || p.i_s < 0.0)
        fail(ErrorCode::InvalidParams, "intensity factors must be >= 0");
    if (!(p.amplitude > 0.0)) fail(ErrorCode::InvalidParams, "amplitude must be > 0");
    if (p.noise_sigma < 0.0) fail(ErrorCode::InvalidParams, "noise_sigma must be >= 0");
    if (p.base_intensity < 0.0)
        fail(ErrorCode::InvalidParams, "base_intensity must be >= 0");
    PulseShape{p.imp_type, p.w_c}.validate();
    if (!(p.max_depth > 0.0)) fail(ErrorCode::InvalidParams, "max_depth must be > 0");
}

namespace {

// Noise-free deterministic part of the model on the effective time axis.
void render_components(const WaveformParams& p, const TimeGrid& grid,
                       const ShiftConfig& shift, WaveformComponents& out) {
    const int n = grid.n_bins;
    const double dt_eff = grid.dt / shift.stretch;
    const PulseShape pulse{shift.pulse_substitution.value_or(p.imp_type), p.w_c};

    const double t_s = grid.t0 + double(kSurfaceBin) * dt_eff;
    const double t_b = t_s + bottom_echo_delay(p.depth);
    if (kSurfaceBin >= n ||
        double(kSurfaceBin) + bottom_echo_delay(p.depth) / dt_eff >= double(n))
        fail(ErrorCode::GridTooShort,
             "grid cannot contain the bottom echo for depth " + std::to_string(p.depth));

    const double bottom_amp = p.i_ref * std::exp(-2.0 * p.kd * p.depth);
    out.surface.assign(size_t(n), 0.0);
    out.column.assign(size_t(n), 0.0);
    out.bottom.assign(size_t(n), 0.0);
    out.background = p.base_intensity + shift.background_offset;

    for (int i = 0; i < n; ++i) {
        const double tau = grid.t0 + double(i) * dt_eff;
        out.surface[size_t(i)] = p.amplitude * p.i_s * pulse_value(pulse, tau - t_s);
        out.bottom[size_t(i)] = p.amplitude * bottom_amp * pulse_value(pulse, tau - t_b);
        if (tau > t_s && tau < t_b) {
            const double z = (tau - t_s) * kSpeedOfLight / (2.0 * kWaterRefractiveIndex);
            out.column[size_t(i)] = p.amplitude * p.i_w * std::exp(-2.0 * p.kd * z);
        }
    }
}

} // namespace

WaveformComponents simulate_components(const WaveformParams& p, const TimeGrid& grid,
                                       const ShiftConfig& shift) {
    validate_params(p);
    shift.validate();
    grid.validate();
    WaveformComponents c;
    render_components(p, grid, shift, c);
    return c;
}

Waveform simulate_waveform_shifted(const WaveformParams& p, const TimeGrid& grid,
                                   const ShiftConfig& shift, std::uint64_t seed,
                                   std::uint64_t extra_seed) {
    validate_params(p);
    shift.validate();
    grid.validate();

    WaveformComponents c;
    render_components(p, grid, shift, c);

    const size_t n = c.surface.size();
    std::vector<double> acc(n);
    for (size_t i = 0; i < n; ++i)
        acc[i] = c.surface[i] + c.column[i] + c.bottom[i] + c.background;

    if (p.noise_sigma > 0.0) {
        rng::Xoshiro256 gen(seed);
        for (size_t i = 0; i < n; ++i) acc[i] += gen.normal(0.0, p.noise_sigma);
    }
    if (shift.extra_noise > 0.0) {
        rng::Xoshiro256 gen(extra_seed);
        for (size_t i = 0; i < n; ++i) acc[i] += gen.normal(0.0, shift.extra_noise);
    }

    Waveform w;
    w.grid = grid;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) w.samples[i] = static_cast<float>(acc[i]);
    return w;
}

Waveform simulate_waveform(const WaveformParams& p, const TimeGrid& grid,
                           std::uint64_t seed) {
    return simulate_waveform_shifted(p, grid, ShiftConfig{}, seed, 0);
}

void ParamRanges::validate() const {
    const struct {
        const char* name;
        ParamRange r;
    } fields[] = {{"depth", depth},
                  {"kd", kd},
                  {"i_ref", i_ref},
                  {"i_w", i_w},
                  {"i_s", i_s},
                  {"amplitude", amplitude},
                  {"noise_frac", noise_frac},
                  {"base_intensity", base_intensity},
                  {"w_c", w_c}};
    for (const auto& f : fields) {
        if (!std::isfinite(f.r.lo) || !std::isfinite(f.r.hi))
            fail(ErrorCode::BadRange, std::string(f.name) + ": non-finite bound");
        if (f.r.lo > f.r.hi)
            fail(ErrorCode::BadRange, std::string(f.name) + ": low > high");
    }
    if (!(depth.lo > 0.0)) fail(ErrorCode::BadRange, "depth: low must be > 0");
    if (kd.lo < 0.0) fail(ErrorCode::BadRange, "kd: low must be >= 0");
    if (i_ref.lo < 0.0 || i_w.lo < 0.0 || i_s.lo < 0.0)
        fail(ErrorCode::BadRange, "intensity factors: low must be >= 0");
    if (!(amplitude.lo > 0.0)) fail(ErrorCode::BadRange, "amplitude: low must be > 0");
    if (noise_frac.lo < 0.0) fail(ErrorCode::BadRange, "noise_frac: low must be >= 0");
    if (base_intensity.lo < 0.0)
        fail(ErrorCode::BadRange, "base_intensity: low must be >= 0");
    if (!(w_c.lo > 0.0)) fail(ErrorCode::BadRange, "w_c: low must be > 0");
    if (!(max_depth > 0.0)) fail(ErrorCode::BadRange, "max_depth must be > 0");
    if (depth.hi > max_depth)
        fail(ErrorCode::BadRange, "depth: high exceeds max_depth");
}

WaveformParams sample_params(const ParamRanges& ranges, std::uint64_t seed) {
    ranges.validate();
    rng::Xoshiro256 gen(seed);
    WaveformParams p;
    p.depth = gen.uniform(ranges.depth.lo, ranges.depth.hi);
    p.kd = gen.uniform(ranges.kd.lo, ranges.kd.hi);
    p.i_ref = gen.uniform(ranges.i_ref.lo, ranges.i_ref.hi);
    p.i_w = gen.uniform(ranges.i_w.lo, ranges.i_w.hi);
    p.i_s = gen.uniform(ranges.i_s.lo, ranges.i_s.hi);
    p.amplitude = gen.uniform(ranges.amplitude.lo, ranges.amplitude.hi);
    p.noise_sigma = gen.uniform(ranges.noise_frac.lo, ranges.noise_frac.hi) * p.amplitude;
    p.base_intensity = gen.uniform(ranges.base_intensity.lo, ranges.base_intensity.hi);
    p.w_c = gen.uniform(ranges.w_c.lo, ranges.w_c.hi);
    p.imp_type = static_cast<std::int64_t>(gen.uniform_below(3));
    p.max_depth = ranges.max_depth;
    return p;
}

namespace {

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("BWF_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

Dataset generate_impl(std::int64_t n, const ParamRanges& ranges, const TimeGrid& grid,
                      const ShiftConfig& shift, std::uint64_t seed, int workers) {
    if (n < 1) fail(ErrorCode::EmptyDataset, "sample count must be >= 1");
    ranges.validate();
    shift.validate();
    grid.validate();

    Dataset ds;
    ds.grid = grid;
    ds.seed = seed;
    ds.samples.resize(static_cast<size_t>(n));

    auto build_one = [&](std::int64_t i) {
        const std::uint64_t si = rng::derive_stream(seed, static_cast<std::uint64_t>(i));
        LabeledSample& s = ds.samples[static_cast<size_t>(i)];
        s.params = sample_params(ranges, rng::derive_stream(si, 0));
        s.waveform = simulate_waveform_shifted(s.params, grid, shift,
                                               rng::derive_stream(si, 1),
                                               rng::derive_stream(si, 2));
    };

    const int nw = std::min<std::int64_t>(resolve_workers(workers), n);
    if (nw <= 1) {
        for (std::int64_t i = 0; i < n; ++i) build_one(i);
        return ds;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nw));
    for (int k = 0; k < nw; ++k) {
        pool.emplace_back([&, k] {
            try {
                for (std::int64_t i = k; i < n; i += nw) build_one(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return ds;
}

} // namespace

Dataset generate_dataset(std::int64_t n, const ParamRanges& ranges, const TimeGrid& grid,
                         std::uint64_t seed, int workers) {
    return generate_impl(n, ranges, grid, ShiftConfig{}, seed, workers);
}

Dataset generate_shifted_dataset(std::int64_t n, const ParamRanges& ranges,
                                 const TimeGrid& grid, const ShiftConfig& shift,
                                 std::uint64_t seed, int workers) {
    return generate_impl(n, ranges, grid, shift, seed, workers);
}

bool tof_resolvable(const WaveformParams& p, const TimeGrid& grid) {
    const double dt = grid.dt; // identity shift assumed
    const double sigma = p.w_c * kReferencePulseWidth;
    const double fwhm = kFwhmPerSigma * sigma;
    if (bottom_echo_delay(p.depth) < 2.5 * fwhm) return false;
    if (double(kSurfaceBin) + bottom_echo_delay(p.depth) / dt + 3.0 * fwhm / dt >=
        double(grid.n_bins))
        return false;

    const double bottom_amp = p.i_ref * std::exp(-2.0 * p.kd * p.depth);
    if (bottom_amp < 0.05 * p.i_s) return false;

    // The column pedestal steps up right after the surface mode and down at
    // the bottom mode; it must not out-climb either pulse's one-bin decay.
    const PulseShape pulse{p.imp_type, p.w_c};
    const double decay = 1.0 - pulse_value(pulse, dt);
    if (p.i_w > 0.5 * decay * std::min(p.i_s, bottom_amp)) return false;
    return true;
}

} // namespace bwf::sim

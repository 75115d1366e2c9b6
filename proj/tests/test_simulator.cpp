#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bwf/simulate.hpp"

using namespace bwf;
using namespace bwf::sim;

namespace {

WaveformParams clean_params() {
    WaveformParams p;
    p.depth = 10.0;
    p.kd = 0.1;
    p.i_ref = 10.0;
    p.i_w = 0.5;
    p.i_s = 2.0;
    p.amplitude = 1.0;
    p.noise_sigma = 0.0;
    p.base_intensity = 0.0;
    p.w_c = 0.3;
    p.imp_type = 0;
    p.max_depth = 20.0;
    return p;
}

TimeGrid grid512() { return TimeGrid{512, 1e-9, 0.0}; }

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(
        std::max_element(v.begin(), v.end()) - v.begin());
}

// mean and std of a pulse family by quadrature (families 0 and 1 decay
// exponentially, so +-12 sigma captures them)
void pulse_moments(const PulseShape& shape, double& mean, double& std_dev) {
    const double sigma = shape.sigma_seconds();
    const double step = sigma / 2000.0;
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (double t = -12.0 * sigma; t <= 12.0 * sigma; t += step) {
        const double g = pulse_value(shape, t);
        m0 += g;
        m1 += g * t;
        m2 += g * t * t;
    }
    mean = m1 / m0;
    std_dev = std::sqrt(m2 / m0 - mean * mean);
}

} // namespace

TEST_SUITE_BEGIN("simulator");

TEST_CASE("pulse families have unit peak at their mode") {
    for (std::int64_t kind : {0, 1, 2}) {
        const PulseShape shape{kind, 0.7};
        CHECK(pulse_value(shape, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        // the mode is a strict maximum on a fine neighborhood
        const double sigma = shape.sigma_seconds();
        for (double t : {-0.3, -0.1, 0.1, 0.3})
            CHECK(pulse_value(shape, t * sigma) < 1.0);
    }
    CHECK_THROWS_AS(pulse_value(PulseShape{3, 1.0}, 0.0), Error);
    CHECK_THROWS_AS(pulse_value(PulseShape{0, 0.0}, 0.0), Error);
}

TEST_CASE("pulse family moments match the effective width") {
    double mean = 0.0, sd = 0.0;

    SUBCASE("gaussian is symmetric with std w_c * 10 ns") {
        const PulseShape g{0, 0.5};
        pulse_moments(g, mean, sd);
        CHECK(sd == doctest::Approx(g.sigma_seconds()).epsilon(0.01));
        CHECK(std::abs(mean) < 0.01 * g.sigma_seconds());
        CHECK(pulse_value(g, 3e-9) == doctest::Approx(pulse_value(g, -3e-9)));
        CHECK(pulse_value(g, g.sigma_seconds()) ==
              doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    }
    SUBCASE("gumbel is right-skewed with std w_c * 10 ns") {
        const PulseShape g{1, 0.5};
        pulse_moments(g, mean, sd);
        CHECK(sd == doctest::Approx(g.sigma_seconds()).epsilon(0.01));
        CHECK(mean > 0.1 * g.sigma_seconds()); // mode at 0, mean to the right
        CHECK(pulse_value(g, g.sigma_seconds()) >
              pulse_value(g, -g.sigma_seconds()));
    }
    SUBCASE("frechet has bounded left support and a heavy right tail") {
        const PulseShape f{2, 0.5};
        const double s = f.sigma_seconds();
        CHECK(pulse_value(f, -s) == 0.0);
        CHECK(pulse_value(f, -0.5 * s) > 0.0);
        CHECK(pulse_value(f, 5.0 * s) > 100.0 * pulse_value(PulseShape{0, 0.5}, 5.0 * s));
        // the power-law tail overtakes the exponential gumbel tail far out
        CHECK(pulse_value(f, 10.0 * s) > 10.0 * pulse_value(PulseShape{1, 0.5}, 10.0 * s));
    }
}

TEST_CASE("component decomposition matches the received-power model") {
    const WaveformParams p = clean_params();
    const TimeGrid grid = grid512();
    const WaveformComponents c = simulate_components(p, grid);
    REQUIRE(c.surface.size() == 512);
    REQUIRE(c.column.size() == 512);
    REQUIRE(c.bottom.size() == 512);

    SUBCASE("surface echo peaks at the surface bin with height A*i_s") {
        CHECK(argmax(c.surface) == kSurfaceBin);
        CHECK(c.surface[kSurfaceBin] ==
              doctest::Approx(p.amplitude * p.i_s).epsilon(1e-12));
    }
    SUBCASE("bottom echo lands 2*depth*n_w/c after the surface") {
        // depth 10 m -> 88.73 ns -> nearest bin 64 + 89
        CHECK(argmax(c.bottom) == kSurfaceBin + 89);
        const double peak_gain =
            p.amplitude * p.i_ref * std::exp(-2.0 * p.kd * p.depth);
        CHECK(c.bottom[argmax(c.bottom)] <= peak_gain);
        CHECK(c.bottom[argmax(c.bottom)] > 0.95 * peak_gain);
    }
    SUBCASE("column is exponential decay on the open surface-bottom interval") {
        CHECK(c.column[kSurfaceBin] == 0.0);
        CHECK(c.column[kSurfaceBin + 1] > 0.0);
        const double delay_bins = bottom_echo_delay(p.depth) / grid.dt; // 88.73
        CHECK(c.column[kSurfaceBin + 88] > 0.0);  // inside the open interval
        CHECK(c.column[kSurfaceBin + 89] == 0.0); // past the bottom time
        CHECK(delay_bins == doctest::Approx(88.728).epsilon(1e-3));
        // z one bin below the surface
        const double z1 = grid.dt * kSpeedOfLight / (2.0 * kWaterRefractiveIndex);
        CHECK(c.column[kSurfaceBin + 1] ==
              doctest::Approx(p.amplitude * p.i_w * std::exp(-2.0 * p.kd * z1))
                  .epsilon(1e-12));
        const double ratio = c.column[kSurfaceBin + 2] / c.column[kSurfaceBin + 1];
        CHECK(ratio == doctest::Approx(std::exp(-2.0 * p.kd * z1)).epsilon(1e-12));
    }
    SUBCASE("background is the unscaled base intensity") {
        WaveformParams q = clean_params();
        q.amplitude = 3.0;
        q.base_intensity = 0.25;
        const WaveformComponents d = simulate_components(q, grid512());
        CHECK(d.background == 0.25); // not multiplied by amplitude
        CHECK(d.surface[kSurfaceBin] ==
              doctest::Approx(3.0 * q.i_s).epsilon(1e-12));
    }
}

TEST_CASE("noiseless waveform equals the sum of its components") {
    const WaveformParams p = clean_params();
    const TimeGrid grid = grid512();
    const Waveform w = simulate_waveform(p, grid, 77);
    const WaveformComponents c = simulate_components(p, grid);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const double expected = c.surface[i] + c.column[i] + c.bottom[i] + c.background;
        CHECK(static_cast<double>(w.samples[i]) ==
              doctest::Approx(expected).epsilon(1e-6));
    }
    CHECK(w.grid == grid);
}

TEST_CASE("noise is seeded, additive, and has the requested spread") {
    WaveformParams p = clean_params();
    p.noise_sigma = 0.05;
    const TimeGrid grid = grid512();
    const Waveform a = simulate_waveform(p, grid, 5);
    const Waveform b = simulate_waveform(p, grid, 5);
    const Waveform c = simulate_waveform(p, grid, 6);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);

    p.noise_sigma = 0.0;
    const Waveform clean = simulate_waveform(p, grid, 5);
    p.noise_sigma = 0.4;
    double sq = 0.0, sum = 0.0;
    std::size_t n = 0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const Waveform noisy = simulate_waveform(p, grid, seed);
        for (std::size_t i = 0; i < noisy.samples.size(); ++i) {
            const double d =
                static_cast<double>(noisy.samples[i]) - static_cast<double>(clean.samples[i]);
            sum += d;
            sq += d * d;
            ++n;
        }
    }
    const double var = sq / double(n) - (sum / double(n)) * (sum / double(n));
    CHECK(std::sqrt(var) == doctest::Approx(0.4).epsilon(0.05));
}

TEST_CASE("parameter validation rejects out-of-model values") {
    const TimeGrid grid = grid512();
    WaveformParams p = clean_params();
    p.depth = 0.0;
    CHECK_THROWS_AS(simulate_waveform(p, grid, 1), Error);
    p = clean_params();
    p.depth = 25.0; // beyond max_depth
    CHECK_THROWS_AS(simulate_waveform(p, grid, 1), Error);
    p = clean_params();
    p.kd = -0.1;
    CHECK_THROWS_AS(simulate_waveform(p, grid, 1), Error);
    p = clean_params();
    p.imp_type = 7;
    CHECK_THROWS_AS(simulate_waveform(p, grid, 1), Error);

    // grid too short to hold the bottom echo
    p = clean_params();
    p.max_depth = 60.0;
    p.depth = 59.0; // delay of ~523 bins cannot fit after the surface bin
    try {
        simulate_waveform(p, grid, 1);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::GridTooShort);
    }
}

TEST_CASE("shift alters the instrument but never the labels") {
    const TimeGrid grid = grid512();
    ParamRanges ranges; // defaults
    const std::int64_t n = 40;

    const Dataset plain = generate_dataset(n, ranges, grid, 11, 1);
    ShiftConfig shift;
    shift.pulse_substitution = 1;
    shift.background_offset = 0.05;
    shift.stretch = 1.1;
    shift.extra_noise = 0.1;
    const Dataset shifted = generate_shifted_dataset(n, ranges, grid, shift, 11, 1);

    REQUIRE(shifted.size() == n);
    bool any_wave_differs = false;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& a = plain.samples[size_t(i)];
        const auto& b = shifted.samples[size_t(i)];
        CHECK(a.params.depth == b.params.depth);
        CHECK(a.params.kd == b.params.kd);
        CHECK(a.params.i_ref == b.params.i_ref);
        CHECK(a.params.imp_type == b.params.imp_type);
        any_wave_differs |= a.waveform.samples != b.waveform.samples;
    }
    CHECK(any_wave_differs);
}

TEST_CASE("time-axis stretch compresses the effective bin width") {
    WaveformParams p = clean_params();
    const TimeGrid grid = grid512();
    ShiftConfig shift;
    shift.stretch = 1.1;
    const WaveformComponents c = simulate_components(p, grid, shift);
    // 88.73 ns now spans 97.6 effective bins -> nearest bin 64 + 98
    CHECK(argmax(c.bottom) == kSurfaceBin + 98);
    CHECK(argmax(c.surface) == kSurfaceBin); // surface pinned to its bin
}

TEST_CASE("generated datasets are worker-count invariant and in range") {
    const TimeGrid grid = grid512();
    ParamRanges ranges;
    const Dataset one = generate_dataset(64, ranges, grid, 3, 1);
    const Dataset eight = generate_dataset(64, ranges, grid, 3, 8);
    REQUIRE(one.size() == 64);
    REQUIRE(eight.size() == 64);
    for (std::int64_t i = 0; i < 64; ++i) {
        CHECK(one.samples[size_t(i)].waveform.samples ==
              eight.samples[size_t(i)].waveform.samples);
        const auto& q = one.samples[size_t(i)].params;
        CHECK(q.depth >= ranges.depth.lo);
        CHECK(q.depth <= ranges.depth.hi);
        CHECK(q.kd >= ranges.kd.lo);
        CHECK(q.kd <= ranges.kd.hi);
        CHECK(q.w_c >= ranges.w_c.lo);
        CHECK(q.w_c <= ranges.w_c.hi);
        CHECK(q.imp_type >= 0);
        CHECK(q.imp_type <= 2);
        CHECK(q.noise_sigma <= ranges.noise_frac.hi * q.amplitude + 1e-15);
    }
    CHECK(one.seed == 3);
    CHECK(one.grid == grid);

    const Dataset other = generate_dataset(64, ranges, grid, 4, 1);
    CHECK(one.samples[0].waveform.samples != other.samples[0].waveform.samples);
}

TEST_CASE("tof_resolvable gates the clean two-echo regime") {
    const TimeGrid grid = grid512();
    // i_w low enough that the column pedestal passes the one-bin-decay gate
    WaveformParams good = clean_params();
    good.kd = 0.05;
    good.i_w = 0.02;
    CHECK(tof_resolvable(good, grid));

    WaveformParams strong_column = good;
    strong_column.i_w = 0.5; // pedestal out-climbs the pulse flanks
    CHECK_FALSE(tof_resolvable(strong_column, grid));

    WaveformParams shallow = good;
    shallow.depth = 0.2; // echoes overlap
    CHECK_FALSE(tof_resolvable(shallow, grid));

    WaveformParams murky = good;
    murky.kd = 1.0; // bottom echo attenuated away
    CHECK_FALSE(tof_resolvable(murky, grid));

    WaveformParams deep = good;
    deep.max_depth = 55.0;
    deep.depth = 50.0;
    deep.kd = 0.01; // bright bottom, but it falls off the 512-bin grid
    CHECK_FALSE(tof_resolvable(deep, TimeGrid{512, 1e-9, 0.0}));
}

TEST_SUITE_END();

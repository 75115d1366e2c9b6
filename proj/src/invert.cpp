#include "bwf/invert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bwf::inv {

std::vector<Peak> detect_peaks(const Waveform& w, double min_prominence) {
    w.validate();
    const auto& s = w.samples;
    const std::int64_t n = static_cast<std::int64_t>(s.size());
    std::vector<Peak> peaks;
    if (n < 3) return peaks;

    for (std::int64_t i = 1; i + 1 < n;) {
        if (!(s[size_t(i)] > s[size_t(i - 1)])) {
            ++i;
            continue;
        }
        // plateau of equal samples starting at i
        std::int64_t j = i;
        while (j + 1 < n && s[size_t(j + 1)] == s[size_t(i)]) ++j;
        if (j + 1 < n && s[size_t(j + 1)] < s[size_t(i)]) {
            const double height = s[size_t(i)];
            double left_valley = height;
            for (std::int64_t k = i - 1; k >= 0; --k) {
                if (s[size_t(k)] >= height) break;
                left_valley = std::min(left_valley, double(s[size_t(k)]));
            }
            double right_valley = height;
            for (std::int64_t k = j + 1; k < n; ++k) {
                if (s[size_t(k)] >= height) break;
                right_valley = std::min(right_valley, double(s[size_t(k)]));
            }
            const double prominence = height - std::min(left_valley, right_valley);
            if (prominence >= min_prominence) {
                Peak p;
                p.index = static_cast<std::int32_t>(i);
                p.time = w.grid.time(i);
                p.height = height;
                p.prominence = prominence;
                peaks.push_back(p);
            }
        }
        i = j + 1;
    }
    return peaks;
}

namespace {

// Full width at half maximum around a detected peak, in seconds; falls back
// to one bin if a half-height crossing is missing on either side.
double measured_fwhm(const Waveform& w, const Peak& p) {
    const auto& s = w.samples;
    const std::int64_t n = static_cast<std::int64_t>(s.size());
    const double half = p.height / 2.0;
    std::int64_t left = p.index;
    while (left > 0 && s[size_t(left)] > half) --left;
    std::int64_t right = p.index;
    while (right + 1 < n && s[size_t(right)] > half) ++right;
    const double width = double(right - left) * w.grid.dt;
    return std::max(width, w.grid.dt);
}

struct EchoPair {
    Peak surface;
    Peak bottom;
};

EchoPair locate_echo_pair(const Waveform& w, double min_prominence,
                          double pulse_width_hint) {
    const std::vector<Peak> peaks = detect_peaks(w, min_prominence);
    if (peaks.empty()) fail(ErrorCode::NoBottomEcho, "no peaks detected");
    if (peaks.size() == 1) {
        // A single peak is ambiguous: with a stated pulse width the caller
        // expects two echoes, so they must have merged below resolvability.
        if (pulse_width_hint > 0.0)
            fail(ErrorCode::PeaksUnresolved,
                 "single peak with an expected two-echo pulse width");
        fail(ErrorCode::NoBottomEcho, "only one peak detected");
    }
    const Peak& first = peaks[0];
    const Peak& second = peaks[1];
    const double separation = second.time - first.time;
    const double floor_width =
        pulse_width_hint > 0.0 ? pulse_width_hint : measured_fwhm(w, first);
    if (separation < floor_width)
        fail(ErrorCode::PeaksUnresolved,
             "echo separation " + std::to_string(separation) +
                 " s below pulse width " + std::to_string(floor_width) + " s");
    return EchoPair{first, second};
}

} // namespace

double depth_from_waveform(const Waveform& w, double n_w, double min_prominence,
                           double pulse_width_hint) {
    const EchoPair pair = locate_echo_pair(w, min_prominence, pulse_width_hint);
    return time_of_flight_distance(pair.bottom.time - pair.surface.time, n_w);
}

Lut build_lut(const LutAxes& axes, const TimeGrid& grid) {
    if (axes.depths.empty() || axes.kds.empty() || axes.i_refs.empty())
        fail(ErrorCode::InvalidParams, "every LUT axis must be nonempty");
    const std::size_t count = axes.depths.size() * axes.kds.size() * axes.i_refs.size();
    if (count > axes.max_entries)
        fail(ErrorCode::LutTooLarge, std::to_string(count) + " entries exceed cap " +
                                         std::to_string(axes.max_entries));
    Lut lut;
    lut.grid = grid;
    lut.entries.reserve(count);
    for (double depth : axes.depths)
        for (double kd : axes.kds)
            for (double i_ref : axes.i_refs) {
                WaveformParams p = axes.base;
                p.depth = depth;
                p.kd = kd;
                p.i_ref = i_ref;
                p.noise_sigma = 0.0;
                LutEntry entry;
                entry.params = p;
                entry.waveform = normalize_peak(sim::simulate_waveform(p, grid, 0));
                lut.entries.push_back(std::move(entry));
            }
    return lut;
}

LutMatch lut_invert(const Waveform& w_ref, const Lut& lut) {
    if (lut.entries.empty()) fail(ErrorCode::EmptyDataset, "LUT has no entries");
    if (!(w_ref.grid == lut.grid))
        fail(ErrorCode::ShapeMismatch, "waveform grid differs from LUT grid");
    const Waveform ref = normalize_peak(w_ref);

    double best = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t e = 0; e < lut.entries.size(); ++e) {
        const auto& entry = lut.entries[e].waveform.samples;
        double merit = 0.0;
        for (std::size_t i = 0; i < entry.size(); ++i) {
            const double d = double(ref.samples[i]) - double(entry[i]);
            merit += d * d;
        }
        if (merit < best) {
            best = merit;
            best_index = e;
        }
    }
    return LutMatch{lut.entries[best_index].params, best, best_index};
}

PairExtraction log_intensity_depth_pairs(std::span<const Waveform> waveforms,
                                         double n_w, double min_prominence_frac,
                                         double pulse_width_hint) {
    PairExtraction out;
    for (std::size_t i = 0; i < waveforms.size(); ++i) {
        const Waveform& w = waveforms[i];
        double max_sample = 0.0;
        for (float s : w.samples) max_sample = std::max(max_sample, double(s));
        try {
            const EchoPair pair =
                locate_echo_pair(w, min_prominence_frac * max_sample, pulse_width_hint);
            if (!(pair.bottom.height > 0.0))
                fail(ErrorCode::NoBottomEcho, "bottom peak not positive");
            DepthIntensityPair p;
            p.depth = time_of_flight_distance(pair.bottom.time - pair.surface.time, n_w);
            p.log_intensity = std::log(pair.bottom.height);
            out.pairs.push_back(p);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NoBottomEcho ||
                e.code() == ErrorCode::PeaksUnresolved) {
                out.skipped.push_back(SkippedWaveform{i, e.code()});
            } else {
                throw;
            }
        }
    }
    return out;
}

AttenuationFit fit_attenuation(std::span<const DepthIntensityPair> points) {
    if (points.size() < 2)
        fail(ErrorCode::SingularFit, "need at least 2 points");
    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& p : points) {
        sx += p.depth;
        sy += p.log_intensity;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : points) {
        const double dx = p.depth - mx;
        const double dy = p.log_intensity - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) fail(ErrorCode::SingularFit, "all depths equal");

    AttenuationFit fit;
    fit.slope = sxy / sxx;
    fit.kd_hat = std::abs(fit.slope);
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (const auto& p : points) {
        const double r = p.log_intensity - (fit.intercept + fit.slope * p.depth);
        ss_res += r * r;
    }
    fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    fit.n_points = points.size();
    return fit;
}

} // namespace bwf::inv

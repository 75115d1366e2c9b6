#include "bwf/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bwf/rng.hpp"

namespace bwf {

Waveform zero_pad(const Waveform& w, std::int32_t target_len) {
    w.validate();
    if (w.grid.n_bins > target_len)
        fail(ErrorCode::LengthExceedsTarget,
             "waveform has " + std::to_string(w.grid.n_bins) + " bins, target is " +
                 std::to_string(target_len));
    Waveform out;
    out.grid = w.grid;
    out.grid.n_bins = target_len;
    out.samples = w.samples;
    out.samples.resize(static_cast<std::size_t>(target_len), 0.0f);
    return out;
}

Waveform normalize_peak(const Waveform& w) {
    w.validate();
    double max_val = -1.0;
    for (float s : w.samples) {
        if (!std::isfinite(s))
            fail(ErrorCode::DegenerateWaveform, "non-finite sample");
        max_val = std::max(max_val, static_cast<double>(s));
    }
    if (!(max_val > 0.0))
        fail(ErrorCode::DegenerateWaveform, "peak is not positive");
    Waveform out;
    out.grid = w.grid;
    out.samples.resize(w.samples.size());
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        out.samples[i] = static_cast<float>(static_cast<double>(w.samples[i]) / max_val);
    return out;
}

Waveform add_noise(const Waveform& w, double sigma, std::uint64_t seed) {
    w.validate();
    if (sigma < 0.0) fail(ErrorCode::NegativeSigma, "noise sigma must be >= 0");
    if (sigma == 0.0) return w;
    Waveform out;
    out.grid = w.grid;
    out.samples.resize(w.samples.size());
    rng::Xoshiro256 gen(seed);
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        out.samples[i] =
            static_cast<float>(static_cast<double>(w.samples[i]) + gen.normal(0.0, sigma));
    return out;
}

SplitSizes split_sizes(std::int64_t n, const std::array<double, 3>& ratios) {
    if (n < 0) fail(ErrorCode::BadRatios, "negative sample count");
    double sum = 0.0;
    for (double r : ratios) {
        if (r < 0.0) fail(ErrorCode::BadRatios, "ratios must be nonnegative");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::BadRatios, "ratios must sum to 1");
    SplitSizes s;
    s.n_train = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * ratios[0]));
    s.n_val = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * ratios[1]));
    s.n_test = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * ratios[2]));
    // remainder from the floors goes to train
    s.n_train += n - (s.n_train + s.n_val + s.n_test);
    return s;
}

std::array<Dataset, 3> split_dataset(const Dataset& ds,
                                     const std::array<double, 3>& ratios,
                                     std::uint64_t seed) {
    const SplitSizes sizes = split_sizes(ds.size(), ratios);
    std::vector<std::size_t> order(ds.samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng::Xoshiro256 gen(seed);
    gen.shuffle(order);

    std::array<Dataset, 3> out;
    const std::array<std::int64_t, 3> counts = {sizes.n_train, sizes.n_val, sizes.n_test};
    const std::array<SplitTag, 3> tags = {SplitTag::Train, SplitTag::Val, SplitTag::Test};
    std::size_t cursor = 0;
    for (int part = 0; part < 3; ++part) {
        out[part].grid = ds.grid;
        out[part].seed = ds.seed;
        out[part].split_tag = tags[part];
        out[part].samples.reserve(static_cast<std::size_t>(counts[part]));
        for (std::int64_t k = 0; k < counts[part]; ++k)
            out[part].samples.push_back(ds.samples[order[cursor++]]);
    }
    return out;
}

Metrics compute_metrics(std::span<const double> predictions,
                        std::span<const double> truths) {
    if (predictions.size() != truths.size() || predictions.empty())
        fail(ErrorCode::LengthMismatch, "prediction/truth vectors must have equal nonzero length");
    const std::size_t n = truths.size();
    double abs_sum = 0.0, sq_sum = 0.0, truth_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = predictions[i] - truths[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        truth_sum += truths[i];
    }
    Metrics m;
    m.mae = abs_sum / static_cast<double>(n);
    m.rmse = std::sqrt(sq_sum / static_cast<double>(n));
    if (m.rmse < m.mae * (1.0 - 1e-9) - 1e-15)
        throw std::logic_error("rmse < mae");

    const double mean = truth_sum / static_cast<double>(n);
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = truths[i] - mean;
        ss_tot += d * d;
    }
    if (ss_tot > 0.0) m.r2 = 1.0 - sq_sum / ss_tot;
    return m;
}

double time_of_flight_distance(double delta_t, double refractive_index) {
    if (delta_t < 0.0) fail(ErrorCode::NegativeTime, "two-way travel time must be >= 0");
    if (!(refractive_index >= 1.0))
        fail(ErrorCode::InvalidParams, "refractive index must be >= 1");
    return (kSpeedOfLight / refractive_index) * delta_t / 2.0;
}

} // namespace bwf

// Acceptance harness: one independently runnable check per release criterion.
// Each criterion prints a single PASS/FAIL line; the process exits nonzero if
// any requested criterion fails. Select criteria with --criteria 1,4,7
// (default: all ten).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bwf/adapt.hpp"
#include "bwf/checkpoint.hpp"
#include "bwf/cli.hpp"
#include "bwf/core.hpp"
#include "bwf/csv.hpp"
#include "bwf/dataset_io.hpp"
#include "bwf/gradcheck.hpp"
#include "bwf/invert.hpp"
#include "bwf/model.hpp"
#include "bwf/rng.hpp"
#include "bwf/simulate.hpp"
#include "bwf/train.hpp"
#include "bwf/transport.hpp"

namespace fs = std::filesystem;
using namespace bwf;

namespace {

struct check_failure {
    std::string what;
};

#define REQUIRE(cond, msg)                                            \
    do {                                                              \
        if (!(cond)) {                                                \
            std::ostringstream os_;                                   \
            os_ << "line " << __LINE__ << ": " << msg;                \
            throw check_failure{os_.str()};                           \
        }                                                             \
    } while (0)

struct stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

double mean_of(const double* v, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s / double(n);
}

double variance_of(const double* v, std::size_t n) {
    const double m = mean_of(v, n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (v[i] - m) * (v[i] - m);
    return s / double(n);
}

fs::path artifacts_dir() {
    const fs::path dir = fs::current_path() / "acceptance_artifacts";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good(), "cannot open " << p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness: analytic backward vs central finite differences on
//    50 random instances of every layer kind, 1e-4 relative error, under 1 min.
// ---------------------------------------------------------------------------

void criterion_gradients() {
    const stopwatch sw;
    const auto rep = nn::run_gradcheck(0xACCE5501ull, 50, 1e-4);
    REQUIRE(rep.cases.size() == 6,
            "expected 6 layer kinds, got " << rep.cases.size());
    for (const auto& c : rep.cases) {
        std::printf("  %-9s max_rel_err=%.3e over %lld elements\n",
                    nn::to_string(c.kind), c.max_rel_err,
                    static_cast<long long>(c.elements));
        REQUIRE(c.elements > 0, nn::to_string(c.kind) << " compared no elements");
        REQUIRE(c.max_rel_err < 1e-4,
                nn::to_string(c.kind) << " rel err " << c.max_rel_err);
    }
    REQUIRE(rep.pass, "gradcheck report did not pass (worst " << rep.worst << ")");
    const double t = sw.seconds();
    std::printf("  worst=%.3e runtime=%.1fs\n", rep.worst, t);
    REQUIRE(t < 60.0, "runtime " << t << " s exceeds the 60 s budget");
}

// ---------------------------------------------------------------------------
// 2. EMD exactness: network-simplex cost equals the brute-force permutation
//    optimum on 100 uniform-marginal instances, n = m in {2..6}, within 1e-9.
// ---------------------------------------------------------------------------

void criterion_emd_exactness() {
    const stopwatch sw;
    rng::Xoshiro256 gen(0xACCE5502ull);
    int instance = 0;
    double worst = 0.0;
    for (int repeat = 0; repeat < 20; ++repeat) {
        for (int n = 2; n <= 6; ++n) {
            ++instance;
            ot::Matrix C(n, n);
            for (auto& x : C.v) x = gen.uniform(0.0, 10.0);
            const std::vector<double> a(std::size_t(n), 1.0 / double(n));
            const auto plan = ot::emd_transport(a, a, C);
            const double emd = ot::transport_cost(plan, C);

            // with uniform marginals the optimum sits on a permutation matrix
            std::vector<int> perm(static_cast<std::size_t>(n), 0);
            std::iota(perm.begin(), perm.end(), 0);
            double best = std::numeric_limits<double>::infinity();
            do {
                double cost = 0.0;
                for (int i = 0; i < n; ++i) cost += C.at(i, perm[std::size_t(i)]);
                best = std::min(best, cost / double(n));
            } while (std::next_permutation(perm.begin(), perm.end()));

            worst = std::max(worst, std::abs(emd - best));
            REQUIRE(std::abs(emd - best) <= 1e-9,
                    "instance " << instance << " (n=" << n << "): emd " << emd
                                << " vs brute force " << best);
        }
    }
    const double t = sw.seconds();
    std::printf("  100 instances, worst |emd - brute force| = %.3e, runtime=%.2fs\n",
                worst, t);
    REQUIRE(t < 60.0, "runtime " << t << " s exceeds the 60 s budget");
}

// ---------------------------------------------------------------------------
// 3. Sinkhorn properties on random 20x30 instances: marginal violation below
//    1e-9, entropic cost never below the exact EMD cost, and the log-domain
//    sweep matches the standard one within 1e-8 per plan entry.
// ---------------------------------------------------------------------------

std::vector<double> random_marginal(std::size_t n, rng::Xoshiro256& gen) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (auto& x : v) {
        x = gen.uniform(0.2, 1.0);
        sum += x;
    }
    for (auto& x : v) x /= sum;
    return v;
}

double plan_violation(const ot::TransportPlan& plan) {
    const auto& P = plan.coupling;
    double worst = 0.0;
    for (std::int64_t i = 0; i < P.rows; ++i) {
        double row = 0.0;
        for (std::int64_t j = 0; j < P.cols; ++j) row += P.at(i, j);
        worst = std::max(worst, std::abs(row - plan.a[std::size_t(i)]));
    }
    for (std::int64_t j = 0; j < P.cols; ++j) {
        double col = 0.0;
        for (std::int64_t i = 0; i < P.rows; ++i) col += P.at(i, j);
        worst = std::max(worst, std::abs(col - plan.b[std::size_t(j)]));
    }
    return worst;
}

void criterion_sinkhorn() {
    const stopwatch sw;
    rng::Xoshiro256 gen(0xACCE5503ull);
    constexpr int kInstances = 20;
    double worst_violation = 0.0;
    double min_gap = std::numeric_limits<double>::infinity();
    double worst_entry_diff = 0.0;
    for (int k = 0; k < kInstances; ++k) {
        const std::int64_t m = 20, n = 30;
        ot::Matrix C(m, n);
        for (auto& x : C.v) x = gen.uniform(0.0, 10.0);
        const auto a = random_marginal(std::size_t(m), gen);
        const auto b = random_marginal(std::size_t(n), gen);

        ot::SinkhornConfig cfg;
        cfg.epsilon = 0.5;
        cfg.tol = 1e-10;
        cfg.max_iter = 200000;
        const auto std_res = ot::sinkhorn_transport(a, b, C, cfg);
        REQUIRE(std_res.converged, "instance " << k << " did not converge");

        const double viol = plan_violation(std_res.plan);
        worst_violation = std::max(worst_violation, viol);
        REQUIRE(viol < 1e-9, "instance " << k << " marginal violation " << viol);

        const auto emd_plan = ot::emd_transport(a, b, C);
        const double emd_cost = ot::transport_cost(emd_plan, C);
        const double ent_cost = ot::transport_cost(std_res.plan, C);
        min_gap = std::min(min_gap, ent_cost - emd_cost);
        REQUIRE(ent_cost >= emd_cost,
                "instance " << k << ": entropic cost " << ent_cost
                            << " below exact cost " << emd_cost);

        const auto log_res = ot::sinkhorn_transport_log(a, b, C, cfg);
        REQUIRE(log_res.converged, "log-domain instance " << k << " did not converge");
        for (std::size_t e = 0; e < std_res.plan.coupling.v.size(); ++e) {
            const double diff =
                std::abs(std_res.plan.coupling.v[e] - log_res.plan.coupling.v[e]);
            worst_entry_diff = std::max(worst_entry_diff, diff);
            REQUIRE(diff <= 1e-8, "instance " << k << " entry " << e
                                              << " log/standard gap " << diff);
        }
    }
    std::printf("  %d instances: worst violation=%.3e, min entropic-exact gap=%.3f, "
                "worst log/standard entry gap=%.3e, runtime=%.2fs\n",
                kInstances, worst_violation, min_gap, worst_entry_diff, sw.seconds());
}

// ---------------------------------------------------------------------------
// 4. Depth round-trip: 1,000 random noiseless waveforms in the resolvable
//    regime; the classical inversion recovers depth within one bin
//    equivalent, c*dt/(2*1.33) ~ 0.113 m at dt = 1 ns. Under 1 min.
// ---------------------------------------------------------------------------

void criterion_depth_round_trip() {
    const stopwatch sw;
    sim::ParamRanges r;
    r.depth = {1.0, 15.0};
    r.kd = {0.01, 0.25};
    r.i_ref = {20.0, 100.0};
    r.i_w = {0.0, 0.02};
    r.i_s = {1.0, 5.0};
    r.amplitude = {1.0, 10.0};
    r.noise_frac = {0.0, 0.0}; // noiseless
    r.base_intensity = {0.0, 0.1};
    r.w_c = {0.2, 0.5};
    r.max_depth = 16.0;
    const TimeGrid grid;
    const double bin_equiv = time_of_flight_distance(grid.dt, kWaterRefractiveIndex);
    constexpr double kFwhmPerSigma = 2.3548200450309493;

    int accepted = 0;
    std::uint64_t draw = 0;
    double worst = 0.0;
    while (accepted < 1000) {
        const auto p = sim::sample_params(r, rng::derive_stream(0xACCE5504ull, draw++));
        if (!sim::tof_resolvable(p, grid)) continue;
        const Waveform w = sim::simulate_waveform(p, grid, 1); // sigma 0: seed unused
        double max_sample = 0.0;
        for (float s : w.samples) max_sample = std::max(max_sample, double(s));
        const double hint = kFwhmPerSigma * p.w_c * sim::kReferencePulseWidth;
        const double d = inv::depth_from_waveform(w, kWaterRefractiveIndex,
                                                  0.01 * max_sample, hint);
        const double err = std::abs(d - p.depth);
        worst = std::max(worst, err);
        REQUIRE(err <= bin_equiv + 1e-12,
                "draw " << draw - 1 << ": depth " << p.depth << " recovered as " << d
                        << " (err " << err << " > " << bin_equiv << ")");
        ++accepted;
    }
    const double t = sw.seconds();
    std::printf("  1000 resolvable waveforms (%llu draws): worst |error|=%.4f m, "
                "bin equivalent=%.4f m, runtime=%.1fs\n",
                static_cast<unsigned long long>(draw), worst, bin_equiv, t);
    REQUIRE(t < 60.0, "runtime " << t << " s exceeds the 60 s budget");
}

// ---------------------------------------------------------------------------
// 5. kd regression recovery: log-intensity points planted with slope -0.2323
//    and Gaussian noise (std 0.1); over 20 seeds of 1,000 points each the
//    fitted |slope| stays within +/-0.01 of the planted value.
// ---------------------------------------------------------------------------

void criterion_kd_regression() {
    const stopwatch sw;
    constexpr double kSlope = -0.2323;
    constexpr double kIntercept = 3.912;
    double worst_dev = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        rng::Xoshiro256 gen(rng::derive_stream(0xACCE5505ull, std::uint64_t(seed)));
        std::vector<inv::DepthIntensityPair> pts(1000);
        for (auto& p : pts) {
            p.depth = gen.uniform(0.5, 20.0);
            p.log_intensity = kIntercept + kSlope * p.depth + gen.normal(0.0, 0.1);
        }
        const auto fit = inv::fit_attenuation(pts);
        REQUIRE(fit.n_points == 1000, "seed " << seed << " used " << fit.n_points);
        REQUIRE(fit.slope < 0.0, "seed " << seed << " slope " << fit.slope);
        const double dev = std::abs(fit.kd_hat - (-kSlope));
        worst_dev = std::max(worst_dev, dev);
        REQUIRE(dev <= 0.01, "seed " << seed << ": kd_hat " << fit.kd_hat
                                     << " deviates by " << dev);
    }
    const double t = sw.seconds();
    std::printf("  20 seeds x 1000 points: worst |kd_hat - 0.2323| = %.5f, "
                "runtime=%.2fs\n",
                worst_dev, t);
    REQUIRE(t < 60.0, "runtime " << t << " s exceeds the 60 s budget");
}

// ---------------------------------------------------------------------------
// 6. LUT inversion: every entry retrieves itself with merit exactly 0; 3x
//    scaled copies retrieve the same entry (homothetic normalization, merit
//    within float quantization); midpoint targets match an independent
//    exhaustive argmin.
// ---------------------------------------------------------------------------

void criterion_lut() {
    inv::LutAxes axes;
    axes.depths = {2.0, 4.0, 6.0, 8.0, 10.0};
    axes.kds = {0.05, 0.15, 0.25, 0.35};
    axes.i_refs = {10.0, 30.0, 50.0, 70.0};
    axes.base.i_w = 0.05;
    axes.base.i_s = 3.0;
    axes.base.amplitude = 1.0;
    axes.base.noise_sigma = 0.0;
    axes.base.base_intensity = 0.02;
    axes.base.w_c = 0.35;
    axes.base.imp_type = 0;
    axes.base.max_depth = 12.0;
    const TimeGrid grid;
    const auto lut = inv::build_lut(axes, grid);
    REQUIRE(lut.entries.size() == 80, "expected 80 entries, got " << lut.entries.size());

    for (std::size_t e = 0; e < lut.entries.size(); ++e) {
        const auto match = inv::lut_invert(lut.entries[e].waveform, lut);
        REQUIRE(match.index == e, "entry " << e << " retrieved " << match.index);
        REQUIRE(match.merit == 0.0, "entry " << e << " self-merit " << match.merit);
    }

    double worst_scaled_merit = 0.0;
    for (std::size_t e = 0; e < lut.entries.size(); ++e) {
        Waveform scaled = lut.entries[e].waveform;
        for (auto& s : scaled.samples) s *= 3.0f;
        const auto match = inv::lut_invert(scaled, lut);
        REQUIRE(match.index == e, "3x entry " << e << " retrieved " << match.index);
        worst_scaled_merit = std::max(worst_scaled_merit, match.merit);
        REQUIRE(match.merit <= 1e-10,
                "3x entry " << e << " merit " << match.merit
                            << " above the float32 quantization bound");
    }

    // midpoints of adjacent grid nodes, resolved by brute-force merit scan
    int checked = 0;
    for (std::size_t di = 0; di + 1 < axes.depths.size(); ++di) {
        for (std::size_t ki = 0; ki + 1 < axes.kds.size(); ++ki) {
            for (std::size_t ri = 0; ri + 1 < axes.i_refs.size(); ++ri) {
                WaveformParams p = axes.base;
                p.depth = 0.5 * (axes.depths[di] + axes.depths[di + 1]);
                p.kd = 0.5 * (axes.kds[ki] + axes.kds[ki + 1]);
                p.i_ref = 0.5 * (axes.i_refs[ri] + axes.i_refs[ri + 1]);
                const Waveform target = sim::simulate_waveform(p, grid, 1);
                const auto match = inv::lut_invert(target, lut);

                const Waveform ref = normalize_peak(target);
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
                REQUIRE(match.index == best_index,
                        "midpoint (" << p.depth << ", " << p.kd << ", " << p.i_ref
                                     << ") retrieved " << match.index
                                     << " but exhaustive argmin is " << best_index);
                REQUIRE(match.merit == best, "midpoint merit mismatch");
                ++checked;
            }
        }
    }
    std::printf("  80 self-retrievals exact, 80 homothetic retrievals (worst merit "
                "%.2e), %d midpoint targets match the exhaustive argmin\n",
                worst_scaled_merit, checked);
}

// ---------------------------------------------------------------------------
// 7. Desk-scale training: 50,000 simulated waveforms, tri-branch model with
//    10 convs per branch, at most 30 epochs, within 2 h. Gates: kd test
//    r2 >= 0.8; r2(kd) > r2(depth) > r2(bottom); exported MAE curves trend
//    down under the early-stopping contract.
// ---------------------------------------------------------------------------

nn::ModelConfig desk_model_config() {
    nn::ModelConfig cfg;
    cfg.convs_per_branch = 10;
    cfg.pool_every = 2;
    cfg.kernel_size = 5;
    cfg.filters = {8, 8, 12, 12, 16, 16, 24, 24, 32, 32};
    cfg.dense_units = 64;
    cfg.input_len = 512;
    return cfg;
}

void check_early_stop_contract(const nn::TrainReport& rep,
                               const nn::TrainConfig& tc) {
    REQUIRE(!rep.diverged, "training diverged");
    REQUIRE(rep.train_loss.size() == rep.val_loss.size(), "curve length mismatch");
    REQUIRE(std::int64_t(rep.val_loss.size()) == rep.stopped_epoch,
            "curves do not cover every completed epoch");
    const auto best_it = std::min_element(rep.val_loss.begin(), rep.val_loss.end());
    REQUIRE(rep.best_epoch == 1 + (best_it - rep.val_loss.begin()),
            "best epoch " << rep.best_epoch << " is not the val-loss argmin");
    REQUIRE(rep.best_val_loss == *best_it, "best val loss is not the curve minimum");
    REQUIRE(rep.stopped_epoch == tc.max_epochs ||
                rep.stopped_epoch - rep.best_epoch >= tc.early_stop_patience,
            "stopped at epoch " << rep.stopped_epoch << " without exhausting "
                                << "patience or the epoch budget");

    // monotone trend: the last third of each curve sits below the first third
    const std::size_t n = rep.train_loss.size();
    REQUIRE(n >= 3, "too few epochs to assess the trend");
    const std::size_t third = n / 3;
    const double train_head = mean_of(rep.train_loss.data(), third);
    const double train_tail = mean_of(rep.train_loss.data() + (n - third), third);
    const double val_head = mean_of(rep.val_loss.data(), third);
    const double val_tail = mean_of(rep.val_loss.data() + (n - third), third);
    REQUIRE(train_tail < train_head, "train MAE trend is not downward (head "
                                         << train_head << ", tail " << train_tail
                                         << ")");
    REQUIRE(val_tail < val_head, "val MAE trend is not downward (head "
                                     << val_head << ", tail " << val_tail << ")");
    REQUIRE(rep.best_val_loss < rep.val_loss.front(),
            "validation never improved on the first epoch");
}

void criterion_desk_training() {
    const stopwatch sw;
    const sim::ParamRanges ranges;
    const TimeGrid grid;
    std::printf("  generating 50000 waveforms\n");
    std::fflush(stdout);
    const Dataset ds = sim::generate_dataset(50000, ranges, grid, 20260815ull, 1);
    const auto parts = split_dataset(ds, {0.8, 0.15, 0.05}, 1);

    const nn::ModelConfig mc = desk_model_config();
    REQUIRE(mc.convs_per_branch >= 10, "model must carry at least 10 convs");
    nn::TrainConfig tc;
    tc.batch_size = 32;
    tc.max_epochs = 30;
    tc.learning_rate = 1e-3;
    tc.early_stop_patience = 5;
    tc.seed = 1;

    nn::Model model = nn::build_tribranch(mc, 1);
    const auto counts = nn::count_params(model);
    std::printf("  training %lld/%lld/%lld split, %lld trainable parameters, "
                "<= %lld epochs\n",
                static_cast<long long>(parts[0].size()),
                static_cast<long long>(parts[1].size()),
                static_cast<long long>(parts[2].size()),
                static_cast<long long>(counts.trainable),
                static_cast<long long>(tc.max_epochs));
    std::fflush(stdout);

    const Dataset train_pp = nn::preprocess_dataset(parts[0], mc.input_len);
    const Dataset val_pp = nn::preprocess_dataset(parts[1], mc.input_len);
    const Dataset test_pp = nn::preprocess_dataset(parts[2], mc.input_len);
    const auto rep = nn::train(model, train_pp, val_pp, tc);
    for (std::size_t i = 0; i < rep.train_loss.size(); ++i)
        std::printf("  epoch %2zu: train_mae=%.5f val_mae=%.5f\n", i + 1,
                    rep.train_loss[i], rep.val_loss[i]);

    const fs::path dir = artifacts_dir();
    const fs::path curves = dir / "desk_curves.csv";
    io::export_curves_csv(rep.train_loss, rep.val_loss, curves.string());
    REQUIRE(fs::exists(curves), "curves CSV was not written");
    check_early_stop_contract(rep, tc);

    const auto tm = nn::evaluate(model, test_pp);
    io::export_metrics_csv(tm, (dir / "desk_metrics.csv").string());
    REQUIRE(tm.kd.r2 && tm.depth.r2 && tm.bottom.r2, "r2 undefined on a target");
    std::printf("  test r2: kd=%.4f depth=%.4f bottom=%.4f (mae %.4f / %.4f / %.4f)\n",
                *tm.kd.r2, *tm.depth.r2, *tm.bottom.r2, tm.kd.mae, tm.depth.mae,
                tm.bottom.mae);
    REQUIRE(*tm.kd.r2 >= 0.8, "kd r2 " << *tm.kd.r2 << " below 0.8");
    REQUIRE(*tm.kd.r2 > *tm.depth.r2,
            "r2 ordering violated: kd " << *tm.kd.r2 << " vs depth " << *tm.depth.r2);
    REQUIRE(*tm.depth.r2 > *tm.bottom.r2, "r2 ordering violated: depth "
                                              << *tm.depth.r2 << " vs bottom "
                                              << *tm.bottom.r2);
    const double t = sw.seconds();
    std::printf("  runtime=%.0fs (budget 7200s), curves at %s\n", t,
                curves.string().c_str());
    REQUIRE(t < 7200.0, "runtime " << t << " s exceeds the 2 h budget");
}

// ---------------------------------------------------------------------------
// 8. Noise augmentation: against one pinned seed set, the noise-augmented
//    model's validation-loss curve over the final 10 epochs has lower
//    variance and no higher final value than the noise-free model's curve on
//    the same noisy validation set.
// ---------------------------------------------------------------------------

nn::ModelConfig compact_model_config() {
    nn::ModelConfig cfg;
    cfg.convs_per_branch = 4;
    cfg.pool_every = 1;
    cfg.kernel_size = 5;
    cfg.filters = {8, 8, 16, 16};
    cfg.dense_units = 32;
    cfg.input_len = 512;
    return cfg;
}

void criterion_noise_augmentation() {
    // pinned experiment seeds
    constexpr std::uint64_t kTrainGenSeed = 0xACCE5508ull;
    constexpr std::uint64_t kValGenSeed = 0xACCE55F8ull;
    constexpr std::uint64_t kInitSeed = 808;
    constexpr std::uint64_t kTrainSeed = 88;

    const TimeGrid grid;
    sim::ParamRanges clean;
    clean.noise_frac = {0.0, 0.0};
    sim::ParamRanges noisy;
    noisy.noise_frac = {0.03, 0.03};

    const nn::ModelConfig mc = compact_model_config();
    const Dataset train_pp = nn::preprocess_dataset(
        sim::generate_dataset(4000, clean, grid, kTrainGenSeed, 1), mc.input_len);
    const Dataset val_pp = nn::preprocess_dataset(
        sim::generate_dataset(1000, noisy, grid, kValGenSeed, 1), mc.input_len);

    nn::TrainConfig base;
    base.batch_size = 32;
    base.max_epochs = 20;
    base.learning_rate = 1e-3;
    base.early_stop_patience = 20; // run every epoch; the curve is the experiment
    base.seed = kTrainSeed;
    nn::TrainConfig augmented = base;
    augmented.noise_augment_sigma = 0.01;

    nn::Model plain = nn::build_tribranch(mc, kInitSeed);
    nn::Model robust = nn::build_tribranch(mc, kInitSeed);
    const auto rep_plain = nn::train(plain, train_pp, val_pp, base);
    const auto rep_aug = nn::train(robust, train_pp, val_pp, augmented);
    REQUIRE(rep_plain.val_loss.size() == 20, "noise-free run stopped early");
    REQUIRE(rep_aug.val_loss.size() == 20, "augmented run stopped early");

    const fs::path dir = artifacts_dir();
    io::export_curves_csv(rep_plain.train_loss, rep_plain.val_loss,
                          (dir / "noise_free_curves.csv").string());
    io::export_curves_csv(rep_aug.train_loss, rep_aug.val_loss,
                          (dir / "noise_augmented_curves.csv").string());

    const double var_plain = variance_of(rep_plain.val_loss.data() + 10, 10);
    const double var_aug = variance_of(rep_aug.val_loss.data() + 10, 10);
    const double final_plain = rep_plain.val_loss.back();
    const double final_aug = rep_aug.val_loss.back();
    std::printf("  final-10-epoch val-loss variance: augmented=%.4e vs "
                "noise-free=%.4e; final val loss: augmented=%.5f vs "
                "noise-free=%.5f\n",
                var_aug, var_plain, final_aug, final_plain);
    REQUIRE(var_aug < var_plain, "augmented variance " << var_aug
                                                       << " not below noise-free "
                                                       << var_plain);
    REQUIRE(final_aug <= final_plain, "augmented final val loss "
                                          << final_aug << " above noise-free "
                                          << final_plain);
}

// ---------------------------------------------------------------------------
// 9. Adaptation direction: on a shifted-simulator target, Sinkhorn +
//    barycentric mapping strictly lowers kd MAE; fine-tuning on 10% labeled
//    target strictly lowers depth MAE below both. Under 30 min.
// ---------------------------------------------------------------------------

void criterion_adaptation() {
    const stopwatch sw;
    const TimeGrid grid;
    const sim::ParamRanges ranges;

    // source-domain model
    const Dataset source = sim::generate_dataset(12000, ranges, grid, 0xACCE5509ull, 1);
    const auto parts = split_dataset(source, {0.8, 0.15, 0.05}, 9);
    const nn::ModelConfig mc = compact_model_config();
    nn::TrainConfig tc;
    tc.batch_size = 32;
    tc.max_epochs = 15;
    tc.learning_rate = 1e-3;
    tc.early_stop_patience = 5;
    tc.seed = 909;
    nn::Model model = nn::build_tribranch(mc, 9090);
    const Dataset src_train_pp = nn::preprocess_dataset(parts[0], mc.input_len);
    const Dataset src_val_pp = nn::preprocess_dataset(parts[1], mc.input_len);
    const auto rep = nn::train(model, src_train_pp, src_val_pp, tc);
    std::printf("  source model: %lld epochs, best val MAE %.4f\n",
                static_cast<long long>(rep.stopped_epoch), rep.best_val_loss);
    std::fflush(stdout);

    // second-instrument target: gumbel pulse, stretched time axis, raised
    // background and a much higher noise floor; labels stay truthful
    sim::ShiftConfig shift;
    shift.pulse_substitution = 1;
    shift.background_offset = 0.05;
    shift.stretch = 1.1;
    shift.extra_noise = 1.5;
    const Dataset target =
        sim::generate_shifted_dataset(9600, ranges, grid, shift, 0xACCE55A9ull, 1);

    // pinned roles: 10% labeled for fine-tuning, then a fixed 2000-sample
    // evaluation set shared by all three contenders
    std::vector<std::size_t> order(target.samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng::Xoshiro256 subset_gen(0xACCE55B9ull);
    subset_gen.shuffle(order);
    const std::size_t n_labeled = target.samples.size() / 10;
    const std::size_t n_eval = 2000;
    Dataset labeled, eval_set;
    labeled.grid = eval_set.grid = target.grid;
    labeled.seed = eval_set.seed = target.seed;
    for (std::size_t i = 0; i < n_labeled; ++i)
        labeled.samples.push_back(target.samples[order[i]]);
    for (std::size_t i = n_labeled; i < n_labeled + n_eval; ++i)
        eval_set.samples.push_back(target.samples[order[i]]);
    const Dataset eval_pp = nn::preprocess_dataset(eval_set, mc.input_len);

    // [a] source model applied directly
    const auto tm_direct = nn::evaluate(model, eval_pp);

    // [b] Sinkhorn + barycentric mapping onto a pinned 1000-waveform source
    //     basis; the target side is exactly the shared evaluation set
    std::vector<std::size_t> src_order(parts[0].samples.size());
    std::iota(src_order.begin(), src_order.end(), std::size_t{0});
    rng::Xoshiro256 basis_gen(0xACCE55C9ull);
    basis_gen.shuffle(src_order);
    std::vector<LabeledSample> basis;
    for (std::size_t i = 0; i < 1000; ++i)
        basis.push_back(parts[0].samples[src_order[i]]);

    adapt::AdaptConfig ac;
    ac.epsilon_scale = 0.01;
    ac.tol = 1e-9;
    ac.max_iter = 5000;
    ac.subsample_cap = 2000;
    ac.seed = 99;
    const auto adapted = adapt::adapt_and_predict(model, eval_set.samples, basis, ac);
    REQUIRE(adapted.metrics.has_value(), "adaptation produced no metrics");
    REQUIRE(adapted.predictions.size() == eval_set.samples.size(),
            "adaptation dropped target samples");
    std::printf("  sinkhorn: epsilon=%.4f iterations=%lld violation=%.2e "
                "converged=%s log_domain=%s\n",
                adapted.epsilon, static_cast<long long>(adapted.sinkhorn_iterations),
                adapted.sinkhorn_violation, adapted.sinkhorn_converged ? "yes" : "no",
                adapted.used_log_domain ? "yes" : "no");

    // [c] fine-tuned on the 10% labeled target subset at the full learning rate
    nn::TrainConfig ftc;
    ftc.batch_size = 16;
    ftc.max_epochs = 150;
    ftc.learning_rate = 1e-3;
    ftc.early_stop_patience = 150;
    ftc.seed = 911;
    const auto tuned = adapt::fine_tune(model, labeled, ftc, 1.0);
    const auto tm_tuned = nn::evaluate(tuned.model, eval_pp);

    const double kd_direct = tm_direct.kd.mae;
    const double kd_adapted = adapted.metrics->kd.mae;
    const double depth_direct = tm_direct.depth.mae;
    const double depth_adapted = adapted.metrics->depth.mae;
    const double depth_tuned = tm_tuned.depth.mae;
    std::printf("  kd MAE: direct=%.4f adapted=%.4f | depth MAE: direct=%.4f "
                "adapted=%.4f fine-tuned=%.4f\n",
                kd_direct, kd_adapted, depth_direct, depth_adapted, depth_tuned);
    REQUIRE(kd_adapted < kd_direct, "adapted kd MAE " << kd_adapted
                                                      << " not below direct "
                                                      << kd_direct);
    REQUIRE(depth_tuned < depth_direct, "fine-tuned depth MAE "
                                            << depth_tuned << " not below direct "
                                            << depth_direct);
    REQUIRE(depth_tuned < depth_adapted, "fine-tuned depth MAE "
                                             << depth_tuned
                                             << " not below adaptation-only "
                                             << depth_adapted);
    const double t = sw.seconds();
    std::printf("  runtime=%.0fs (budget 1800s)\n", t);
    REQUIRE(t < 1800.0, "runtime " << t << " s exceeds the 30 min budget");
}

// ---------------------------------------------------------------------------
// 10. Determinism: generate -> split -> train -> evaluate with pinned seeds
//     yields byte-identical dataset files and identical metrics CSVs across
//     two runs and across 1 vs 8 generation workers.
// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("bathywave");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run_command(static_cast<int>(argv.size()), argv.data());
}

void criterion_determinism() {
    const fs::path dir = fs::temp_directory_path() / "bwf_acceptance_c10";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "run.json";
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({
  "n_samples": 2000,
  "seed": 99,
  "model": { "convs_per_branch": 4, "pool_every": 1, "kernel_size": 5,
             "filters": [8, 8, 16, 16], "dense_units": 32, "input_len": 512 },
  "train": { "batch_size": 16, "max_epochs": 3, "learning_rate": 1e-3,
             "early_stop_patience": 5, "seed": 5 }
})";
    }
    const std::string cfg = cfg_path.string();

    const fs::path ds_a = dir / "a.bwf", ds_b = dir / "b.bwf", ds_c = dir / "c.bwf";
    REQUIRE(run_cli({"generate", "--config", cfg, "--out", ds_a.string(),
                     "--workers", "1"}) == 0,
            "generate run 1 failed");
    REQUIRE(run_cli({"generate", "--config", cfg, "--out", ds_b.string(),
                     "--workers", "1"}) == 0,
            "generate run 2 failed");
    REQUIRE(run_cli({"generate", "--config", cfg, "--out", ds_c.string(),
                     "--workers", "8"}) == 0,
            "generate with 8 workers failed");
    REQUIRE(slurp(ds_a) == slurp(ds_b), "repeat generation differs byte-wise");
    REQUIRE(slurp(ds_a) == slurp(ds_c), "1-worker vs 8-worker datasets differ");

    const fs::path model1 = dir / "m1.bwnn", model2 = dir / "m2.bwnn";
    const fs::path met1 = dir / "met1.csv", met2 = dir / "met2.csv";
    const fs::path cur1 = dir / "cur1.csv", cur2 = dir / "cur2.csv";
    REQUIRE(run_cli({"train", "--config", cfg, "--in", ds_a.string(), "--model-out",
                     model1.string(), "--metrics", met1.string(), "--curves",
                     cur1.string()}) == 0,
            "train run 1 failed");
    REQUIRE(run_cli({"train", "--config", cfg, "--in", ds_a.string(), "--model-out",
                     model2.string(), "--metrics", met2.string(), "--curves",
                     cur2.string()}) == 0,
            "train run 2 failed");
    REQUIRE(slurp(met1) == slurp(met2), "training metrics CSVs differ");
    REQUIRE(slurp(cur1) == slurp(cur2), "learning-curve CSVs differ");
    REQUIRE(slurp(model1) == slurp(model2), "checkpoints differ byte-wise");

    const fs::path ev1 = dir / "ev1.csv", ev2 = dir / "ev2.csv";
    REQUIRE(run_cli({"evaluate", "--config", cfg, "--in", ds_a.string(), "--model",
                     model1.string(), "--metrics", ev1.string()}) == 0,
            "evaluate run 1 failed");
    REQUIRE(run_cli({"evaluate", "--config", cfg, "--in", ds_a.string(), "--model",
                     model2.string(), "--metrics", ev2.string()}) == 0,
            "evaluate run 2 failed");
    REQUIRE(slurp(ev1) == slurp(ev2), "evaluation metrics CSVs differ");
    std::printf("  datasets, checkpoints, learning curves and metrics all "
                "byte-identical across reruns and worker counts\n");
}

// ---------------------------------------------------------------------------

struct Criterion {
    int id;
    const char* name;
    void (*fn)();
};

const Criterion kCriteria[] = {
    {1, "gradient correctness", criterion_gradients},
    {2, "emd exactness", criterion_emd_exactness},
    {3, "sinkhorn properties", criterion_sinkhorn},
    {4, "depth round-trip", criterion_depth_round_trip},
    {5, "kd regression recovery", criterion_kd_regression},
    {6, "lut inversion", criterion_lut},
    {7, "desk-scale training", criterion_desk_training},
    {8, "noise augmentation", criterion_noise_augmentation},
    {9, "adaptation direction", criterion_adaptation},
    {10, "determinism", criterion_determinism},
};

std::vector<int> parse_criteria(int argc, char** argv) {
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) != "--criteria") continue;
        if (i + 1 >= argc) {
            std::cerr << "--criteria needs a comma-separated list\n";
            std::exit(2);
        }
        std::stringstream list(argv[i + 1]);
        std::string tok;
        while (std::getline(list, tok, ',')) {
            const int id = std::atoi(tok.c_str());
            if (id < 1 || id > 10) {
                std::cerr << "unknown criterion '" << tok << "'\n";
                std::exit(2);
            }
            ids.push_back(id);
        }
    }
    if (ids.empty())
        for (const auto& c : kCriteria) ids.push_back(c.id);
    return ids;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<int> ids = parse_criteria(argc, argv);
    int failures = 0;
    for (const int id : ids) {
        const auto& c = kCriteria[id - 1];
        std::printf("criterion %d (%s):\n", c.id, c.name);
        std::fflush(stdout);
        const stopwatch sw;
        try {
            c.fn();
            std::printf("criterion %d (%s): PASS (%.1fs)\n", c.id, c.name,
                        sw.seconds());
        } catch (const check_failure& f) {
            ++failures;
            std::printf("criterion %d (%s): FAIL (%.1fs) %s\n", c.id, c.name,
                        sw.seconds(), f.what.c_str());
        } catch (const std::exception& e) {
            ++failures;
            std::printf("criterion %d (%s): FAIL (%.1fs) unexpected exception: %s\n",
                        c.id, c.name, sw.seconds(), e.what());
        }
        std::fflush(stdout);
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}

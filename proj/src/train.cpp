#include "bwf/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bwf/rng.hpp"

namespace bwf::nn {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct AdamSlot {
    std::vector<double> m, v;
};

struct AdamState {
    // one slot per (branch, layer, param-array) in traversal order
    std::vector<AdamSlot> slots;
    std::int64_t t = 0;
};

void adam_update(std::vector<double>& param, const std::vector<double>& grad,
                 AdamSlot& slot, double lr, double bias1, double bias2) {
    if (slot.m.size() != param.size()) {
        slot.m.assign(param.size(), 0.0);
        slot.v.assign(param.size(), 0.0);
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        slot.m[i] = kBeta1 * slot.m[i] + (1.0 - kBeta1) * g;
        slot.v[i] = kBeta2 * slot.v[i] + (1.0 - kBeta2) * g * g;
        const double mhat = slot.m[i] / bias1;
        const double vhat = slot.v[i] / bias2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
}

void step_model(Model& m, AdamState& state, double lr) {
    ++state.t;
    const double bias1 = 1.0 - std::pow(kBeta1, double(state.t));
    const double bias2 = 1.0 - std::pow(kBeta2, double(state.t));
    std::size_t s = 0;
    auto slot = [&]() -> AdamSlot& {
        if (s >= state.slots.size()) state.slots.resize(s + 1);
        return state.slots[s++];
    };
    for (Branch& branch : m.branches)
        for (Layer& l : branch.layers) {
            if (!l.w.empty()) adam_update(l.w, l.gw, slot(), lr, bias1, bias2);
            if (!l.b.empty()) adam_update(l.b, l.gb, slot(), lr, bias1, bias2);
            if (!l.gamma.empty()) adam_update(l.gamma, l.ggamma, slot(), lr, bias1, bias2);
            if (!l.beta.empty()) adam_update(l.beta, l.gbeta, slot(), lr, bias1, bias2);
        }
}

struct Targets {
    std::vector<double> depth, kd, bottom;
};

Targets extract_targets(const Dataset& ds) {
    Targets t;
    t.depth.reserve(ds.samples.size());
    t.kd.reserve(ds.samples.size());
    t.bottom.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        t.depth.push_back(s.params.depth);
        t.kd.push_back(s.params.kd);
        t.bottom.push_back(s.params.i_ref);
    }
    return t;
}

const std::vector<double>& branch_targets(const Targets& t, std::int64_t br) {
    return br == 0 ? t.depth : br == 1 ? t.kd : t.bottom;
}

/// Mean-of-branches MAE on a dataset, infer mode, batched.
double dataset_loss(const Model& m, const Dataset& ds, const Targets& targets,
                    std::int64_t batch_size) {
    double abs_sum = 0.0;
    const std::size_t n = ds.samples.size();
    std::vector<Waveform> batch;
    for (std::size_t start = 0; start < n; start += size_t(batch_size)) {
        const std::size_t count = std::min(size_t(batch_size), n - start);
        batch.clear();
        for (std::size_t i = 0; i < count; ++i)
            batch.push_back(ds.samples[start + i].waveform);
        const Tensor x = pack_waveforms(batch, m.cfg.input_len);
        for (std::int64_t br = 0; br < ModelConfig::branches; ++br) {
            const Tensor y = branch_infer(m.branches[size_t(br)], x);
            const auto& truth = branch_targets(targets, br);
            for (std::size_t i = 0; i < count; ++i)
                abs_sum += std::abs(y.v[i] - truth[start + i]);
        }
    }
    return abs_sum / (double(n) * double(ModelConfig::branches));
}

struct Snapshot {
    std::vector<std::vector<double>> arrays;
};

Snapshot snapshot_params(const Model& m) {
    Snapshot s;
    for (const Branch& branch : m.branches)
        for (const Layer& l : branch.layers) {
            s.arrays.push_back(l.w);
            s.arrays.push_back(l.b);
            s.arrays.push_back(l.gamma);
            s.arrays.push_back(l.beta);
            s.arrays.push_back(l.run_mean);
            s.arrays.push_back(l.run_var);
        }
    return s;
}

void restore_params(Model& m, const Snapshot& s) {
    std::size_t i = 0;
    for (Branch& branch : m.branches)
        for (Layer& l : branch.layers) {
            l.w = s.arrays[i++];
            l.b = s.arrays[i++];
            l.gamma = s.arrays[i++];
            l.beta = s.arrays[i++];
            l.run_mean = s.arrays[i++];
            l.run_var = s.arrays[i++];
        }
}

} // namespace

TrainReport train(Model& m, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_ds.samples.empty() || val_ds.samples.empty())
        fail(ErrorCode::EmptyDataset, "training needs non-empty train and val sets");

    TrainReport report;
    if (cfg.max_epochs == 0) return report;

    const Targets train_targets = extract_targets(train_ds);
    const Targets val_targets = extract_targets(val_ds);
    const std::size_t n_train = train_ds.samples.size();
    const std::int64_t input_len = m.cfg.input_len;

    AdamState adam;
    Snapshot best = snapshot_params(m);
    double best_val = std::numeric_limits<double>::infinity();
    std::int64_t best_epoch = 0;

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<Waveform> batch_waves;
    std::vector<std::size_t> batch_idx;

    for (std::int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng::Xoshiro256 shuffle_gen(
            rng::derive_stream(cfg.seed, 0x5u + std::uint64_t(epoch)));
        shuffle_gen.shuffle(order);

        double epoch_abs_sum = 0.0;
        bool diverged = false;

        for (std::size_t start = 0; start < n_train && !diverged;
             start += size_t(cfg.batch_size)) {
            const std::size_t count = std::min(size_t(cfg.batch_size), n_train - start);
            batch_waves.clear();
            batch_idx.assign(order.begin() + std::ptrdiff_t(start),
                             order.begin() + std::ptrdiff_t(start + count));
            for (std::size_t idx : batch_idx)
                batch_waves.push_back(train_ds.samples[idx].waveform);

            Tensor x = pack_waveforms(batch_waves, input_len);
            if (cfg.noise_augment_sigma > 0.0) {
                for (std::size_t i = 0; i < count; ++i) {
                    rng::Xoshiro256 noise_gen(rng::derive_stream(
                        rng::derive_stream(cfg.seed, 0xA06u + std::uint64_t(epoch)),
                        std::uint64_t(batch_idx[i])));
                    double* row = &x.v[i * size_t(input_len)];
                    for (std::int64_t t = 0; t < input_len; ++t)
                        row[t] += noise_gen.normal(0.0, cfg.noise_augment_sigma);
                }
            }

            // forward all branches with caches
            std::vector<std::vector<LayerCache>> caches(ModelConfig::branches);
            std::vector<Tensor> outputs(ModelConfig::branches);
            for (std::int64_t br = 0; br < ModelConfig::branches; ++br) {
                Branch& branch = m.branches[size_t(br)];
                caches[size_t(br)].resize(branch.layers.size());
                Tensor cur = x;
                for (std::size_t li = 0; li < branch.layers.size(); ++li)
                    cur = forward_train(branch.layers[li], cur, caches[size_t(br)][li]);
                outputs[size_t(br)] = std::move(cur);
            }

            double batch_abs_sum = 0.0;
            for (std::int64_t br = 0; br < ModelConfig::branches; ++br) {
                const auto& truth = branch_targets(train_targets, br);
                for (std::size_t i = 0; i < count; ++i)
                    batch_abs_sum +=
                        std::abs(outputs[size_t(br)].v[i] - truth[batch_idx[i]]);
            }
            if (!std::isfinite(batch_abs_sum)) {
                diverged = true;
                break;
            }
            epoch_abs_sum += batch_abs_sum;

            // d(loss)/d(pred) for loss = mean over branches of per-branch MAE
            for (Branch& branch : m.branches)
                for (Layer& l : branch.layers) l.zero_grads();
            const double scale = 1.0 / (double(count) * double(ModelConfig::branches));
            for (std::int64_t br = 0; br < ModelConfig::branches; ++br) {
                Branch& branch = m.branches[size_t(br)];
                const auto& truth = branch_targets(train_targets, br);
                Tensor g(outputs[size_t(br)].batch, 1, 1);
                for (std::size_t i = 0; i < count; ++i) {
                    const double e = outputs[size_t(br)].v[i] - truth[batch_idx[i]];
                    g.v[i] = e > 0.0 ? scale : (e < 0.0 ? -scale : 0.0);
                }
                Tensor cur = std::move(g);
                for (std::size_t li = branch.layers.size(); li-- > 0;)
                    cur = backward(branch.layers[li], cur, caches[size_t(br)][li]);
            }
            step_model(m, adam, cfg.learning_rate);
        }

        if (diverged) {
            report.diverged = true;
            break;
        }

        report.train_loss.push_back(epoch_abs_sum /
                                    (double(n_train) * double(ModelConfig::branches)));
        const double val = dataset_loss(m, val_ds, val_targets, 256);
        report.val_loss.push_back(val);
        report.stopped_epoch = epoch;
        if (!std::isfinite(val)) {
            report.diverged = true;
            break;
        }

        if (val < best_val) {
            best_val = val;
            best_epoch = epoch;
            best = snapshot_params(m);
        } else if (epoch - best_epoch >= cfg.early_stop_patience) {
            break;
        }
    }

    // Restore the best validation snapshot; if nothing ever completed
    // (divergence before the first validation pass) fall back to the initial
    // weights so the caller never sees a half-updated model.
    if (best_epoch > 0 || report.diverged) restore_params(m, best);
    if (best_epoch > 0) {
        report.best_epoch = best_epoch;
        report.best_val_loss = best_val;
    } else {
        report.best_val_loss = std::numeric_limits<double>::quiet_NaN();
    }
    if (!report.val_loss.empty() && best_epoch > 0)
        report.val_metrics = evaluate(m, val_ds);
    return report;
}

} // namespace bwf::nn

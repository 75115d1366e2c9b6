#include "bwf/model.hpp"

#include <cmath>
#include <string>

#include "bwf/rng.hpp"

namespace bwf::nn {

std::int64_t ModelConfig::flat_length() const {
    std::int64_t len = input_len;
    for (std::int64_t i = 0; i < pool_count(); ++i) len /= 2;
    return len;
}

void ModelConfig::validate() const {
    if (convs_per_branch < 1) fail(ErrorCode::BadConfig, "convs_per_branch must be >= 1");
    if (pool_every < 1) fail(ErrorCode::BadConfig, "pool_every must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        fail(ErrorCode::BadConfig, "kernel_size must be odd and >= 1");
    if (dense_units < 1) fail(ErrorCode::BadConfig, "dense_units must be >= 1");
    if (input_len < 1) fail(ErrorCode::BadConfig, "input_len must be >= 1");
    if (filters.size() != static_cast<std::size_t>(convs_per_branch))
        fail(ErrorCode::BadConfig, "filters must list one width per conv (" +
                                       std::to_string(convs_per_branch) + ")");
    for (std::int64_t f : filters)
        if (f < 1) fail(ErrorCode::BadConfig, "filter widths must be >= 1");

    // every pool halves the length; the chain must stay integral
    std::int64_t len = input_len;
    for (std::int64_t i = 0; i < pool_count(); ++i) {
        if (len % 2 != 0)
            fail(ErrorCode::BadConfig, "input_len does not survive " +
                                           std::to_string(pool_count()) + " poolings");
        len /= 2;
    }
    if (len < 1) fail(ErrorCode::BadConfig, "too many poolings for input_len");
}

namespace {

Layer make_conv(std::int64_t kernel, std::int64_t in_ch, std::int64_t out_ch,
                rng::Xoshiro256& gen) {
    Layer l;
    l.kind = LayerKind::Conv1d;
    l.kernel = kernel;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.w.resize(static_cast<std::size_t>(kernel * in_ch * out_ch));
    l.b.assign(static_cast<std::size_t>(out_ch), 0.0);
    const double limit = std::sqrt(6.0 / double(kernel * in_ch));
    for (double& v : l.w) v = gen.uniform(-limit, limit);
    return l;
}

Layer make_dense(std::int64_t in_features, std::int64_t units, rng::Xoshiro256& gen) {
    Layer l;
    l.kind = LayerKind::Dense;
    l.in_ch = in_features;
    l.out_ch = units;
    l.w.resize(static_cast<std::size_t>(in_features * units));
    l.b.assign(static_cast<std::size_t>(units), 0.0);
    const double limit = std::sqrt(6.0 / double(in_features));
    for (double& v : l.w) v = gen.uniform(-limit, limit);
    return l;
}

Layer make_batchnorm(std::int64_t channels) {
    Layer l;
    l.kind = LayerKind::BatchNorm;
    l.in_ch = channels;
    l.out_ch = channels;
    l.gamma.assign(static_cast<std::size_t>(channels), 1.0);
    l.beta.assign(static_cast<std::size_t>(channels), 0.0);
    l.run_mean.assign(static_cast<std::size_t>(channels), 0.0);
    l.run_var.assign(static_cast<std::size_t>(channels), 1.0);
    return l;
}

Layer make_plain(LayerKind kind) {
    Layer l;
    l.kind = kind;
    return l;
}

} // namespace

Model build_tribranch(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    m.init_seed = seed;
    m.branches.resize(ModelConfig::branches);

    for (std::int64_t br = 0; br < ModelConfig::branches; ++br) {
        Branch& branch = m.branches[static_cast<std::size_t>(br)];
        std::int64_t in_ch = 1;
        std::int64_t layer_idx = 0;
        auto layer_gen = [&](std::uint64_t extra) {
            return rng::Xoshiro256(rng::derive_stream(
                rng::derive_stream(seed, static_cast<std::uint64_t>(br)),
                static_cast<std::uint64_t>(layer_idx) * 4 + extra));
        };
        for (std::int64_t c = 0; c < cfg.convs_per_branch; ++c) {
            const std::int64_t out_ch = cfg.filters[static_cast<std::size_t>(c)];
            auto gen = layer_gen(0);
            branch.layers.push_back(make_conv(cfg.kernel_size, in_ch, out_ch, gen));
            ++layer_idx;
            branch.layers.push_back(make_batchnorm(out_ch));
            ++layer_idx;
            branch.layers.push_back(make_plain(LayerKind::Relu));
            ++layer_idx;
            if ((c + 1) % cfg.pool_every == 0) {
                branch.layers.push_back(make_plain(LayerKind::MaxPool));
                ++layer_idx;
            }
            in_ch = out_ch;
        }
        branch.layers.push_back(make_plain(LayerKind::Flatten));
        ++layer_idx;
        const std::int64_t flat = cfg.flat_length() * in_ch;
        {
            auto gen = layer_gen(1);
            branch.layers.push_back(make_dense(flat, cfg.dense_units, gen));
            ++layer_idx;
        }
        branch.layers.push_back(make_plain(LayerKind::Relu));
        ++layer_idx;
        {
            auto gen = layer_gen(2);
            branch.layers.push_back(make_dense(cfg.dense_units, 1, gen));
            ++layer_idx;
        }
    }
    return m;
}

ParamCounts count_params(const Model& m) {
    ParamCounts c;
    for (const Branch& branch : m.branches)
        for (const Layer& l : branch.layers) {
            c.trainable += static_cast<std::int64_t>(l.w.size() + l.b.size() +
                                                     l.gamma.size() + l.beta.size());
            c.non_trainable +=
                static_cast<std::int64_t>(l.run_mean.size() + l.run_var.size());
        }
    c.total = c.trainable + c.non_trainable;
    return c;
}

Tensor pack_waveforms(std::span<const Waveform> waveforms, std::int64_t input_len) {
    if (waveforms.empty()) fail(ErrorCode::EmptyDataset, "no waveforms to pack");
    Tensor x(static_cast<std::int64_t>(waveforms.size()), input_len, 1);
    for (std::size_t n = 0; n < waveforms.size(); ++n) {
        const Waveform& w = waveforms[n];
        if (w.grid.n_bins != input_len || w.samples.size() != size_t(input_len))
            fail(ErrorCode::ShapeMismatch,
                 "waveform length " + std::to_string(w.grid.n_bins) +
                     " does not match model input " + std::to_string(input_len));
        double* row = &x.v[n * static_cast<std::size_t>(input_len)];
        for (std::int64_t t = 0; t < input_len; ++t)
            row[t] = static_cast<double>(w.samples[static_cast<std::size_t>(t)]);
    }
    return x;
}

std::vector<Waveform> preprocess_waveforms(std::span<const Waveform> waveforms,
                                           std::int64_t length) {
    const auto target = static_cast<std::int32_t>(length);
    std::vector<Waveform> out;
    out.reserve(waveforms.size());
    for (const Waveform& w : waveforms)
        out.push_back(normalize_peak(zero_pad(w, target)));
    return out;
}

Dataset preprocess_dataset(const Dataset& ds, std::int64_t length) {
    const auto target = static_cast<std::int32_t>(length);
    Dataset out;
    out.grid = TimeGrid{target, ds.grid.dt, ds.grid.t0};
    out.seed = ds.seed;
    out.split_tag = ds.split_tag;
    out.samples.reserve(ds.samples.size());
    for (const LabeledSample& s : ds.samples) {
        LabeledSample copy = s;
        copy.waveform = normalize_peak(zero_pad(s.waveform, target));
        out.samples.push_back(std::move(copy));
    }
    return out;
}

Tensor branch_infer(const Branch& branch, const Tensor& x) {
    Tensor cur = x;
    for (const Layer& l : branch.layers) cur = forward_infer(l, cur);
    return cur;
}

std::vector<Prediction> predict(const Model& m, std::span<const Waveform> waveforms,
                                std::int64_t batch_size) {
    if (batch_size < 1) fail(ErrorCode::BadConfig, "batch_size must be >= 1");
    std::vector<Prediction> out(waveforms.size());
    for (std::size_t start = 0; start < waveforms.size();
         start += static_cast<std::size_t>(batch_size)) {
        const std::size_t count =
            std::min(static_cast<std::size_t>(batch_size), waveforms.size() - start);
        const Tensor x = pack_waveforms(waveforms.subspan(start, count), m.cfg.input_len);
        for (std::int64_t br = 0; br < ModelConfig::branches; ++br) {
            const Tensor y = branch_infer(m.branches[static_cast<std::size_t>(br)], x);
            for (std::size_t n = 0; n < count; ++n) {
                double& slot = br == 0   ? out[start + n].depth
                               : br == 1 ? out[start + n].kd
                                         : out[start + n].bottom;
                slot = y.v[n];
            }
        }
    }
    return out;
}

TargetMetrics evaluate_predictions(std::span<const Prediction> preds,
                                   std::span<const LabeledSample> samples) {
    if (preds.size() != samples.size())
        fail(ErrorCode::LengthMismatch, "prediction/sample count mismatch");
    std::vector<double> pd(preds.size()), pk(preds.size()), pb(preds.size());
    std::vector<double> td(preds.size()), tk(preds.size()), tb(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        pd[i] = preds[i].depth;
        pk[i] = preds[i].kd;
        pb[i] = preds[i].bottom;
        td[i] = samples[i].params.depth;
        tk[i] = samples[i].params.kd;
        tb[i] = samples[i].params.i_ref;
    }
    TargetMetrics tm;
    tm.depth = compute_metrics(pd, td);
    tm.kd = compute_metrics(pk, tk);
    tm.bottom = compute_metrics(pb, tb);
    return tm;
}

TargetMetrics evaluate(const Model& m, const Dataset& ds) {
    if (ds.samples.empty()) fail(ErrorCode::EmptyDataset, "cannot evaluate empty dataset");
    std::vector<Waveform> waves;
    waves.reserve(ds.samples.size());
    for (const auto& s : ds.samples) waves.push_back(s.waveform);
    const std::vector<Prediction> preds = predict(m, waves);
    return evaluate_predictions(preds, ds.samples);
}

} // namespace bwf::nn

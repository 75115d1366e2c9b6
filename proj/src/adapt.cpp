#include "bwf/adapt.hpp"

#include <algorithm>
#include <numeric>

#include "bwf/rng.hpp"

namespace bwf::adapt {

namespace {

std::vector<std::size_t> pick_subsample(std::size_t n, std::int64_t cap,
                                        std::uint64_t stream_seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (std::int64_t(n) <= cap) return idx;
    rng::Xoshiro256 gen(stream_seed);
    // partial Fisher-Yates: the first `cap` positions become the draw
    for (std::size_t i = 0; i < std::size_t(cap); ++i) {
        const std::size_t j = i + std::size_t(gen.uniform_below(std::uint64_t(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(std::size_t(cap));
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<Waveform> gather(std::span<const Waveform> all,
                             const std::vector<std::size_t>& idx) {
    std::vector<Waveform> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

} // namespace

void AdaptConfig::validate() const {
    if (!(epsilon_scale > 0.0)) fail(ErrorCode::BadConfig, "epsilon_scale must be > 0");
    if (!(tol > 0.0)) fail(ErrorCode::BadConfig, "tol must be > 0");
    if (max_iter < 1) fail(ErrorCode::BadConfig, "max_iter must be >= 1");
    if (subsample_cap < 1) fail(ErrorCode::BadConfig, "subsample_cap must be >= 1");
}

AdaptResult adapt_and_predict(const nn::Model& m, std::span<const Waveform> target,
                              std::span<const Waveform> source,
                              const AdaptConfig& cfg) {
    cfg.validate();
    if (target.empty() || source.empty())
        fail(ErrorCode::EmptyDataset, "adaptation needs non-empty target and source");

    AdaptResult res;
    res.source_indices = pick_subsample(source.size(), cfg.subsample_cap,
                                        rng::derive_stream(cfg.seed, 0));
    res.target_indices = pick_subsample(target.size(), cfg.subsample_cap,
                                        rng::derive_stream(cfg.seed, 1));

    const std::vector<Waveform> src_pre = nn::preprocess_waveforms(
        gather(source, res.source_indices), m.cfg.input_len);
    const std::vector<Waveform> tgt_pre = nn::preprocess_waveforms(
        gather(target, res.target_indices), m.cfg.input_len);

    const ot::Matrix C = ot::cost_matrix(src_pre, tgt_pre);
    res.epsilon = ot::default_epsilon(C, cfg.epsilon_scale);
    ot::SinkhornConfig scfg;
    scfg.epsilon = res.epsilon;
    scfg.tol = cfg.tol;
    scfg.max_iter = cfg.max_iter;
    const std::vector<double> a(src_pre.size(), 1.0 / double(src_pre.size()));
    const std::vector<double> b(tgt_pre.size(), 1.0 / double(tgt_pre.size()));

    ot::SinkhornResult sk = ot::sinkhorn_transport(a, b, C, scfg);
    res.sinkhorn_iterations = sk.iterations;
    res.sinkhorn_violation = sk.violation;
    res.sinkhorn_converged = sk.converged;
    res.used_log_domain = sk.used_log_domain;

    const std::vector<Waveform> mapped =
        ot::barycentric_map(sk.plan, src_pre, tgt_pre, ot::MapDirection::TargetToSource);
    res.predictions = nn::predict(m, mapped);
    return res;
}

AdaptResult adapt_and_predict(const nn::Model& m,
                              std::span<const LabeledSample> target,
                              std::span<const LabeledSample> source,
                              const AdaptConfig& cfg) {
    std::vector<Waveform> tgt, src;
    tgt.reserve(target.size());
    src.reserve(source.size());
    for (const auto& s : target) tgt.push_back(s.waveform);
    for (const auto& s : source) src.push_back(s.waveform);

    AdaptResult res = adapt_and_predict(m, tgt, src, cfg);
    std::vector<LabeledSample> kept;
    kept.reserve(res.target_indices.size());
    for (std::size_t i : res.target_indices) kept.push_back(target[i]);
    res.metrics = nn::evaluate_predictions(res.predictions, kept);
    return res;
}

FineTuneResult fine_tune(const nn::Model& m, const Dataset& labeled_target,
                         const nn::TrainConfig& cfg, double lr_scale) {
    cfg.validate();
    if (!(lr_scale > 0.0)) fail(ErrorCode::BadConfig, "lr_scale must be > 0");
    if (labeled_target.samples.empty())
        fail(ErrorCode::EmptyDataset, "fine-tuning needs labeled samples");

    FineTuneResult out{m, {}};
    if (cfg.max_epochs == 0) return out; // bitwise-unchanged contract

    const Dataset pre = nn::preprocess_dataset(labeled_target, m.cfg.input_len);
    const std::size_t n = pre.samples.size();

    Dataset tune_train, tune_val;
    tune_train.grid = tune_val.grid = pre.grid;
    tune_train.seed = tune_val.seed = pre.seed;
    tune_train.split_tag = SplitTag::Train;
    tune_val.split_tag = SplitTag::Val;
    if (n == 1) {
        tune_train.samples = pre.samples;
        tune_val.samples = pre.samples;
    } else {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng::Xoshiro256 gen(rng::derive_stream(cfg.seed, 0x17u));
        gen.shuffle(order);
        const std::size_t n_val = std::max<std::size_t>(1, n * 15 / 100);
        for (std::size_t i = 0; i < n; ++i) {
            auto& dst = i < n_val ? tune_val : tune_train;
            dst.samples.push_back(pre.samples[order[i]]);
        }
    }

    nn::TrainConfig scaled = cfg;
    scaled.learning_rate = cfg.learning_rate * lr_scale;
    out.report = nn::train(out.model, tune_train, tune_val, scaled);
    return out;
}

} // namespace bwf::adapt

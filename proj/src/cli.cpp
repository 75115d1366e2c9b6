#include "bwf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bwf/adapt.hpp"
#include "bwf/checkpoint.hpp"
#include "bwf/config.hpp"
#include "bwf/core.hpp"
#include "bwf/csv.hpp"
#include "bwf/dataset_io.hpp"
#include "bwf/gradcheck.hpp"
#include "bwf/invert.hpp"
#include "bwf/model.hpp"
#include "bwf/rng.hpp"
#include "bwf/simulate.hpp"
#include "bwf/train.hpp"

namespace bwf::cli {

namespace {

std::string fmt(double x) {
    std::ostringstream out;
    out.precision(9);
    out << x;
    return out.str();
}

io::RunConfig make_config(const std::string& config_path) {
    return config_path.empty() ? io::default_run_config()
                               : io::load_run_config(config_path);
}

void set_path(io::RunConfig& cfg, const char* role, const std::string& value) {
    if (!value.empty()) cfg.paths[role] = value;
}

std::string opt_path(const io::RunConfig& cfg, const char* role) {
    auto it = cfg.paths.find(role);
    return it == cfg.paths.end() ? std::string{} : it->second;
}

std::string need_path(const io::RunConfig& cfg, const char* role, const char* what) {
    std::string p = opt_path(cfg, role);
    if (p.empty())
        fail(ErrorCode::ConfigError,
             std::string("paths.") + role + ": required (" + what + ")");
    return p;
}

std::vector<Waveform> collect_waveforms(const Dataset& ds) {
    std::vector<Waveform> out;
    out.reserve(ds.samples.size());
    for (const auto& s : ds.samples) out.push_back(s.waveform);
    return out;
}

void print_metrics(const char* name, const Metrics& m) {
    std::cout << name << ": mae=" << fmt(m.mae) << " rmse=" << fmt(m.rmse)
              << " r2=" << (m.r2 ? fmt(*m.r2) : std::string("n/a")) << "\n";
}

void print_target_metrics(const nn::TargetMetrics& tm) {
    print_metrics("depth", tm.depth);
    print_metrics("kd", tm.kd);
    print_metrics("bottom", tm.bottom);
}

void print_train_report(const nn::TrainReport& rep) {
    for (std::size_t i = 0; i < rep.train_loss.size(); ++i)
        std::cout << "epoch " << (i + 1) << ": train_loss=" << fmt(rep.train_loss[i])
                  << " val_loss=" << fmt(rep.val_loss[i]) << "\n";
    if (rep.diverged) std::cout << "training diverged; initial weights restored\n";
    std::cout << "stopped at epoch " << rep.stopped_epoch << ", best epoch "
              << rep.best_epoch << " (val_loss=" << fmt(rep.best_val_loss) << ")\n";
}

/// Seeded k-of-n subset (partial Fisher-Yates, ascending order).
std::vector<std::size_t> draw_subset(std::size_t n, std::size_t k,
                                     std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng::Xoshiro256 gen(rng::derive_stream(seed, 0x46));
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(gen.uniform_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

struct GenerateFlags {
    std::string config, out;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    int workers = 0;
    CLI::Option* n_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
};

void add_generate_flags(CLI::App* sub, GenerateFlags& f) {
    sub->add_option("--config", f.config, "JSON run configuration");
    f.n_opt = sub->add_option("--n", f.n, "number of waveforms");
    f.seed_opt = sub->add_option("--seed", f.seed, "generator seed");
    f.workers_opt = sub->add_option("--workers", f.workers,
                                    "worker threads (0 = BWF_THREADS or 1)");
    sub->add_option("--out", f.out, "output dataset path");
}

void run_generate(const GenerateFlags& f, bool shifted) {
    io::RunConfig cfg = make_config(f.config);
    if (f.n_opt->count()) cfg.n_samples = f.n;
    if (f.seed_opt->count()) cfg.seed = f.seed;
    if (f.workers_opt->count()) cfg.workers = f.workers;
    set_path(cfg, "out", f.out);
    cfg.validate();
    const std::string out = need_path(cfg, "out", "dataset to write");

    Dataset ds = shifted
                     ? sim::generate_shifted_dataset(cfg.n_samples, cfg.ranges,
                                                     cfg.grid, cfg.shift, cfg.seed,
                                                     cfg.workers)
                     : sim::generate_dataset(cfg.n_samples, cfg.ranges, cfg.grid,
                                             cfg.seed, cfg.workers);
    io::write_dataset(ds, out);
    std::cout << "wrote " << ds.size() << (shifted ? " shifted" : "")
              << " waveforms (" << cfg.grid.n_bins << " bins) to " << out << "\n";
}

} // namespace

int run_command(int argc, const char* const* argv) {
    try {
        CLI::App app{"Full-waveform bathymetric lidar toolkit"};
        app.set_help_all_flag("--help-all", "print help for every subcommand");
        app.require_subcommand(1);

        // generate / generate-shifted -------------------------------------
        auto* gen = app.add_subcommand("generate", "simulate a labeled dataset");
        GenerateFlags gf;
        add_generate_flags(gen, gf);
        gen->callback([&gf] { run_generate(gf, false); });

        auto* gens = app.add_subcommand(
            "generate-shifted", "simulate a domain-shifted labeled dataset");
        GenerateFlags gsf;
        add_generate_flags(gens, gsf);
        gens->callback([&gsf] { run_generate(gsf, true); });

        // train -------------------------------------------------------------
        auto* tr = app.add_subcommand("train", "train the tri-branch regressor");
        struct {
            std::string config, in, model_out, metrics, curves;
            std::int64_t epochs = 0, batch = 0, patience = 0;
            double lr = 0.0, noise = 0.0;
            std::uint64_t seed = 0;
            CLI::Option *epochs_o, *batch_o, *patience_o, *lr_o, *noise_o, *seed_o;
        } tf;
        tr->add_option("--config", tf.config, "JSON run configuration");
        tr->add_option("--in", tf.in, "input dataset");
        tr->add_option("--model-out", tf.model_out, "checkpoint to write");
        tr->add_option("--metrics", tf.metrics, "test-split metrics CSV");
        tr->add_option("--curves", tf.curves, "learning-curve CSV");
        tf.epochs_o = tr->add_option("--epochs", tf.epochs, "maximum epochs");
        tf.batch_o = tr->add_option("--batch", tf.batch, "mini-batch size");
        tf.patience_o = tr->add_option("--patience", tf.patience,
                                       "early-stopping patience (epochs)");
        tf.lr_o = tr->add_option("--lr", tf.lr, "learning rate");
        tf.noise_o = tr->add_option("--noise-augment", tf.noise,
                                    "training-time Gaussian noise sigma");
        tf.seed_o = tr->add_option("--seed", tf.seed, "init/shuffle seed");
        tr->callback([&tf] {
            io::RunConfig cfg = make_config(tf.config);
            if (tf.epochs_o->count()) cfg.train.max_epochs = tf.epochs;
            if (tf.batch_o->count()) cfg.train.batch_size = tf.batch;
            if (tf.patience_o->count()) cfg.train.early_stop_patience = tf.patience;
            if (tf.lr_o->count()) cfg.train.learning_rate = tf.lr;
            if (tf.noise_o->count()) cfg.train.noise_augment_sigma = tf.noise;
            if (tf.seed_o->count()) cfg.train.seed = tf.seed;
            set_path(cfg, "in", tf.in);
            set_path(cfg, "model_out", tf.model_out);
            set_path(cfg, "metrics_csv", tf.metrics);
            set_path(cfg, "curves_csv", tf.curves);
            cfg.validate();
            const std::string in = need_path(cfg, "in", "training dataset");
            const std::string model_out =
                need_path(cfg, "model_out", "checkpoint to write");
            const std::string metrics = opt_path(cfg, "metrics_csv");
            const std::string curves = opt_path(cfg, "curves_csv");

            Dataset pre =
                nn::preprocess_dataset(io::read_dataset(in), cfg.model.input_len);
            auto parts = split_dataset(pre, cfg.split.ratios, cfg.split.seed);
            nn::Model m = nn::build_tribranch(cfg.model, cfg.train.seed);
            const auto counts = nn::count_params(m);
            std::cout << "training on " << parts[0].size() << " samples (val "
                      << parts[1].size() << ", test " << parts[2].size() << "), "
                      << counts.trainable << " trainable parameters\n";

            nn::TrainReport rep = nn::train(m, parts[0], parts[1], cfg.train);
            io::save_model(m, model_out);
            print_train_report(rep);
            std::cout << "saved model to " << model_out << "\n";
            if (!curves.empty())
                io::export_curves_csv(rep.train_loss, rep.val_loss, curves);

            if (parts[2].size() > 0) {
                const auto tm = nn::evaluate(m, parts[2]);
                std::cout << "test metrics (" << parts[2].size() << " samples)\n";
                print_target_metrics(tm);
                if (!metrics.empty()) io::export_metrics_csv(tm, metrics);
            } else if (!metrics.empty()) {
                std::cout << "test split is empty; no metrics CSV written\n";
            }
        });

        // predict -----------------------------------------------------------
        auto* pr = app.add_subcommand("predict", "run the model on a dataset");
        struct {
            std::string config, in, model, preds;
        } pf;
        pr->add_option("--config", pf.config, "JSON run configuration");
        pr->add_option("--in", pf.in, "input dataset");
        pr->add_option("--model", pf.model, "checkpoint to load");
        pr->add_option("--predictions", pf.preds, "predictions CSV to write");
        pr->callback([&pf] {
            io::RunConfig cfg = make_config(pf.config);
            set_path(cfg, "in", pf.in);
            set_path(cfg, "model", pf.model);
            set_path(cfg, "predictions_csv", pf.preds);
            cfg.validate();
            const std::string in = need_path(cfg, "in", "dataset to predict on");
            const std::string model_path = need_path(cfg, "model", "checkpoint");
            const std::string out =
                need_path(cfg, "predictions_csv", "predictions CSV");

            const nn::Model m = io::load_model(model_path);
            Dataset ds = io::read_dataset(in);
            const auto wfs =
                nn::preprocess_waveforms(collect_waveforms(ds), m.cfg.input_len);
            const auto preds = nn::predict(m, wfs);
            io::export_predictions_csv(preds, out);
            std::cout << "predicted " << preds.size() << " waveforms -> " << out
                      << "\n";
        });

        // evaluate ----------------------------------------------------------
        auto* ev = app.add_subcommand("evaluate", "score the model on labels");
        struct {
            std::string config, in, model, metrics;
        } ef;
        ev->add_option("--config", ef.config, "JSON run configuration");
        ev->add_option("--in", ef.in, "labeled dataset");
        ev->add_option("--model", ef.model, "checkpoint to load");
        ev->add_option("--metrics", ef.metrics, "metrics CSV to write");
        ev->callback([&ef] {
            io::RunConfig cfg = make_config(ef.config);
            set_path(cfg, "in", ef.in);
            set_path(cfg, "model", ef.model);
            set_path(cfg, "metrics_csv", ef.metrics);
            cfg.validate();
            const std::string in = need_path(cfg, "in", "labeled dataset");
            const std::string model_path = need_path(cfg, "model", "checkpoint");
            const std::string metrics = opt_path(cfg, "metrics_csv");

            const nn::Model m = io::load_model(model_path);
            Dataset pre =
                nn::preprocess_dataset(io::read_dataset(in), m.cfg.input_len);
            const auto tm = nn::evaluate(m, pre);
            std::cout << "evaluated " << pre.size() << " samples\n";
            print_target_metrics(tm);
            if (!metrics.empty()) io::export_metrics_csv(tm, metrics);
        });

        // invert ------------------------------------------------------------
        auto* iv = app.add_subcommand(
            "invert", "classical two-echo time-of-flight depths");
        struct {
            std::string config, in, out;
            double prom = 0.0, hint = 0.0;
            CLI::Option *prom_o, *hint_o;
        } vf;
        iv->add_option("--config", vf.config, "JSON run configuration");
        iv->add_option("--in", vf.in, "input dataset");
        iv->add_option("--out", vf.out, "depth CSV to write");
        vf.prom_o = iv->add_option("--prominence", vf.prom,
                                   "peak prominence threshold, fraction of max");
        vf.hint_o = iv->add_option("--hint", vf.hint,
                                   "expected pulse width, seconds (0 = none)");
        iv->callback([&vf] {
            io::RunConfig cfg = make_config(vf.config);
            if (vf.prom_o->count()) cfg.invert.min_prominence_frac = vf.prom;
            if (vf.hint_o->count()) cfg.invert.pulse_width_hint = vf.hint;
            set_path(cfg, "in", vf.in);
            set_path(cfg, "out", vf.out);
            cfg.validate();
            const std::string in = need_path(cfg, "in", "dataset to invert");
            const std::string out = need_path(cfg, "out", "depth CSV");

            Dataset ds = io::read_dataset(in);
            std::vector<io::DepthRow> rows;
            std::size_t skipped = 0;
            for (std::size_t i = 0; i < ds.samples.size(); ++i) {
                const auto& s = ds.samples[i];
                const auto& v = s.waveform.samples;
                const double mx = static_cast<double>(
                    *std::max_element(v.begin(), v.end()));
                if (!(mx > 0.0)) {
                    ++skipped;
                    continue;
                }
                try {
                    const double d = inv::depth_from_waveform(
                        s.waveform, kWaterRefractiveIndex,
                        cfg.invert.min_prominence_frac * mx,
                        cfg.invert.pulse_width_hint);
                    rows.push_back({i, d, s.params.depth});
                } catch (const Error& e) {
                    if (e.code() == ErrorCode::NoBottomEcho ||
                        e.code() == ErrorCode::PeaksUnresolved)
                        ++skipped;
                    else
                        throw;
                }
            }
            io::export_depths_csv(rows, out);
            std::cout << "inverted " << rows.size() << " of " << ds.size()
                      << " waveforms (skipped " << skipped << ") -> " << out
                      << "\n";
        });

        // kdfit ---------------------------------------------------------------
        auto* kf = app.add_subcommand(
            "kdfit", "attenuation regression on log bottom intensity vs depth");
        struct {
            std::string config, in, scatter;
            double prom = 0.0, hint = 0.0;
            CLI::Option *prom_o, *hint_o;
        } kff;
        kf->add_option("--config", kff.config, "JSON run configuration");
        kf->add_option("--in", kff.in, "input dataset");
        kf->add_option("--scatter", kff.scatter, "scatter CSV to write");
        kff.prom_o = kf->add_option("--prominence", kff.prom,
                                    "peak prominence threshold, fraction of max");
        kff.hint_o = kf->add_option("--hint", kff.hint,
                                    "expected pulse width, seconds (0 = none)");
        kf->callback([&kff] {
            io::RunConfig cfg = make_config(kff.config);
            if (kff.prom_o->count()) cfg.invert.min_prominence_frac = kff.prom;
            if (kff.hint_o->count()) cfg.invert.pulse_width_hint = kff.hint;
            set_path(cfg, "in", kff.in);
            set_path(cfg, "scatter_csv", kff.scatter);
            cfg.validate();
            const std::string in = need_path(cfg, "in", "dataset to fit");
            const std::string scatter = opt_path(cfg, "scatter_csv");

            Dataset ds = io::read_dataset(in);
            const auto wfs = collect_waveforms(ds);
            const auto ext = inv::log_intensity_depth_pairs(
                wfs, kWaterRefractiveIndex, cfg.invert.min_prominence_frac,
                cfg.invert.pulse_width_hint);
            const auto fit = inv::fit_attenuation(ext.pairs);
            if (!scatter.empty()) io::export_scatter_csv(ext.pairs, scatter);
            std::cout << "fitted " << fit.n_points << " depth/intensity pairs"
                      << " (skipped " << ext.skipped.size() << " waveforms)\n"
                      << "kd_hat=" << fmt(fit.kd_hat)
                      << " (|slope|, two-way) kd_water=" << fmt(fit.kd_hat / 2.0)
                      << "\nintercept=" << fmt(fit.intercept)
                      << " r2=" << fmt(fit.r2) << "\n";
        });

        // adapt ---------------------------------------------------------------
        auto* ad = app.add_subcommand(
            "adapt", "optimal-transport domain adaptation, then predict");
        struct {
            std::string config, source, target, model, preds, metrics;
            double eps_scale = 0.0;
            std::int64_t cap = 0;
            std::uint64_t seed = 0;
            CLI::Option *eps_o, *cap_o, *seed_o;
        } af;
        ad->add_option("--config", af.config, "JSON run configuration");
        ad->add_option("--source", af.source, "source-domain dataset");
        ad->add_option("--target", af.target, "target-domain dataset");
        ad->add_option("--model", af.model, "checkpoint to load");
        ad->add_option("--predictions", af.preds, "predictions CSV to write");
        ad->add_option("--metrics", af.metrics, "metrics CSV to write");
        af.eps_o = ad->add_option("--epsilon-scale", af.eps_scale,
                                  "entropic regularization, fraction of median cost");
        af.cap_o = ad->add_option("--cap", af.cap, "per-side subsample cap");
        af.seed_o = ad->add_option("--seed", af.seed, "subsampling seed");
        ad->callback([&af] {
            io::RunConfig cfg = make_config(af.config);
            if (af.eps_o->count()) cfg.adapt.epsilon_scale = af.eps_scale;
            if (af.cap_o->count()) cfg.adapt.subsample_cap = af.cap;
            if (af.seed_o->count()) cfg.adapt.seed = af.seed;
            set_path(cfg, "source", af.source);
            set_path(cfg, "target", af.target);
            set_path(cfg, "model", af.model);
            set_path(cfg, "predictions_csv", af.preds);
            set_path(cfg, "metrics_csv", af.metrics);
            cfg.validate();
            const std::string source = need_path(cfg, "source", "source dataset");
            const std::string target = need_path(cfg, "target", "target dataset");
            const std::string model_path = need_path(cfg, "model", "checkpoint");
            const std::string preds = opt_path(cfg, "predictions_csv");
            const std::string metrics = opt_path(cfg, "metrics_csv");

            const nn::Model m = io::load_model(model_path);
            Dataset src = io::read_dataset(source);
            Dataset tgt = io::read_dataset(target);
            const auto res = adapt::adapt_and_predict(
                m, std::span<const LabeledSample>(tgt.samples),
                std::span<const LabeledSample>(src.samples), cfg.adapt);
            if (!preds.empty()) io::export_predictions_csv(res.predictions, preds);
            std::cout << "adapted " << res.target_indices.size() << " of "
                      << tgt.size() << " targets against "
                      << res.source_indices.size() << " source waveforms\n"
                      << "epsilon=" << fmt(res.epsilon)
                      << " iterations=" << res.sinkhorn_iterations
                      << " violation=" << fmt(res.sinkhorn_violation)
                      << " converged=" << (res.sinkhorn_converged ? "yes" : "no")
                      << " log_domain=" << (res.used_log_domain ? "yes" : "no")
                      << "\n";
            if (res.metrics) {
                print_target_metrics(*res.metrics);
                if (!metrics.empty()) io::export_metrics_csv(*res.metrics, metrics);
            }
        });

        // finetune --------------------------------------------------------------
        auto* ft = app.add_subcommand(
            "finetune", "continue training on a labeled target subset");
        struct {
            std::string config, in, model, model_out, curves;
            double fraction = 0.0;
            std::int64_t epochs = 0;
            std::uint64_t seed = 0;
            CLI::Option *frac_o, *epochs_o, *seed_o;
        } ff;
        ft->add_option("--config", ff.config, "JSON run configuration");
        ft->add_option("--in", ff.in, "labeled target dataset");
        ft->add_option("--model", ff.model, "checkpoint to load");
        ft->add_option("--model-out", ff.model_out, "checkpoint to write");
        ft->add_option("--curves", ff.curves, "learning-curve CSV");
        ff.frac_o = ft->add_option("--fraction", ff.fraction,
                                   "labeled share of the target set, (0, 1]");
        ff.epochs_o = ft->add_option("--epochs", ff.epochs, "maximum epochs");
        ff.seed_o = ft->add_option("--seed", ff.seed, "subset draw seed");
        ft->callback([&ff] {
            io::RunConfig cfg = make_config(ff.config);
            if (ff.frac_o->count()) cfg.finetune.fraction = ff.fraction;
            if (ff.epochs_o->count()) cfg.train.max_epochs = ff.epochs;
            if (ff.seed_o->count()) cfg.finetune.seed = ff.seed;
            set_path(cfg, "in", ff.in);
            set_path(cfg, "model", ff.model);
            set_path(cfg, "model_out", ff.model_out);
            set_path(cfg, "curves_csv", ff.curves);
            cfg.validate();
            const std::string in = need_path(cfg, "in", "labeled target dataset");
            const std::string model_path = need_path(cfg, "model", "checkpoint");
            const std::string model_out =
                need_path(cfg, "model_out", "checkpoint to write");
            const std::string curves = opt_path(cfg, "curves_csv");

            const nn::Model m = io::load_model(model_path);
            Dataset ds = io::read_dataset(in);
            if (ds.size() == 0) fail(ErrorCode::EmptyDataset, "no samples in " + in);
            const auto n = static_cast<std::size_t>(ds.size());
            const auto k = std::min(
                n, std::max<std::size_t>(
                       1, static_cast<std::size_t>(std::floor(
                              cfg.finetune.fraction * static_cast<double>(n)))));
            Dataset subset{ds.grid, {}, ds.seed, ds.split_tag};
            for (std::size_t i : draw_subset(n, k, cfg.finetune.seed))
                subset.samples.push_back(ds.samples[i]);

            auto result =
                adapt::fine_tune(m, subset, cfg.train, cfg.finetune.lr_scale);
            io::save_model(result.model, model_out);
            std::cout << "fine-tuned on " << k << " of " << n
                      << " labeled targets\n";
            print_train_report(result.report);
            std::cout << "saved model to " << model_out << "\n";
            if (!curves.empty())
                io::export_curves_csv(result.report.train_loss,
                                      result.report.val_loss, curves);
        });

        // gradcheck ---------------------------------------------------------
        auto* gc = app.add_subcommand(
            "gradcheck", "finite-difference audit of every layer's backward pass");
        struct {
            std::uint64_t seed = 1;
            std::int64_t instances = 50;
            double tolerance = 1e-4;
        } gcf;
        gc->add_option("--seed", gcf.seed, "instance seed");
        gc->add_option("--instances", gcf.instances, "instances per layer kind");
        gc->add_option("--tolerance", gcf.tolerance, "relative-error gate");
        bool gradcheck_failed = false;
        gc->callback([&gcf, &gradcheck_failed] {
            const auto rep =
                nn::run_gradcheck(gcf.seed, gcf.instances, gcf.tolerance);
            for (const auto& c : rep.cases) {
                std::ostringstream line;
                line.precision(3);
                line << std::scientific << c.max_rel_err;
                std::cout << nn::to_string(c.kind) << ": max_rel_err=" << line.str()
                          << " over " << c.elements << " elements\n";
            }
            std::cout << "worst=" << fmt(rep.worst)
                      << " tolerance=" << fmt(rep.tolerance) << " -> "
                      << (rep.pass ? "PASS" : "FAIL") << "\n";
            gradcheck_failed = !rep.pass;
        });

        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            std::cerr << "error: " << to_string(ErrorCode::UnknownCommand) << ": "
                      << e.what() << "\n";
            return 2;
        }
        return gradcheck_failed ? 1 : 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: unexpected: " << e.what() << "\n";
        return 3;
    }
}

} // namespace bwf::cli

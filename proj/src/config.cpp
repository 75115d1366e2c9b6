#include "bwf/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bwf::io {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& why) {
    fail(ErrorCode::ConfigError, key + ": " + why);
}

void check_keys(const json& j, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad(prefix.empty() ? "config" : prefix, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            bad(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown key");
    }
}

double num(const json& o, const std::string& prefix, const char* key, double dflt) {
    if (!o.contains(key)) return dflt;
    const json& v = o.at(key);
    if (!v.is_number()) bad(prefix + key, "expected a number");
    return v.get<double>();
}

std::int64_t integer(const json& o, const std::string& prefix, const char* key,
                     std::int64_t dflt) {
    if (!o.contains(key)) return dflt;
    const json& v = o.at(key);
    if (!v.is_number_integer()) bad(prefix + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::uint64_t uinteger(const json& o, const std::string& prefix, const char* key,
                       std::uint64_t dflt) {
    if (!o.contains(key)) return dflt;
    const json& v = o.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    bad(prefix + key, "expected a nonnegative integer");
}

sim::ParamRange range(const json& o, const std::string& prefix, const char* key,
                      sim::ParamRange dflt) {
    if (!o.contains(key)) return dflt;
    const json& v = o.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        bad(prefix + key, "expected [lo, hi]");
    return sim::ParamRange{v[0].get<double>(), v[1].get<double>()};
}

} // namespace

void RunConfig::validate() const {
    auto wrap = [](const char* section, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            fail(ErrorCode::ConfigError, std::string(section) + ": " + e.what());
        }
    };
    if (n_samples < 1) bad("n_samples", "must be >= 1");
    if (workers < 0) bad("workers", "must be >= 0");
    wrap("grid", [&] { grid.validate(); });
    wrap("ranges", [&] { ranges.validate(); });
    wrap("shift", [&] { shift.validate(); });
    wrap("model", [&] { model.validate(); });
    wrap("train", [&] { train.validate(); });
    wrap("adapt", [&] { adapt.validate(); });

    double ratio_sum = 0.0;
    for (double r : split.ratios) {
        if (!(r >= 0.0) || !std::isfinite(r)) bad("split", "ratios must be >= 0");
        ratio_sum += r;
    }
    if (std::abs(ratio_sum - 1.0) > 1e-9) bad("split", "ratios must sum to 1");

    if (!(invert.min_prominence_frac > 0.0) || invert.min_prominence_frac > 1.0)
        bad("invert.min_prominence_frac", "must be in (0, 1]");
    if (!(invert.pulse_width_hint >= 0.0) || !std::isfinite(invert.pulse_width_hint))
        bad("invert.pulse_width_hint", "must be >= 0");

    if (!(finetune.fraction > 0.0) || finetune.fraction > 1.0)
        bad("finetune.fraction", "must be in (0, 1]");
    if (!(finetune.lr_scale > 0.0)) bad("finetune.lr_scale", "must be > 0");

    for (auto it = paths.begin(); it != paths.end(); ++it) {
        if (it->second.empty()) continue;
        for (auto jt = std::next(it); jt != paths.end(); ++jt)
            if (it->second == jt->second)
                bad("paths." + it->first, "refers to the same file as paths." + jt->first);
    }
}

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigError, std::string("invalid JSON: ") + e.what());
    }
    check_keys(root, "",
               {"n_samples", "seed", "workers", "grid", "ranges", "shift", "model",
                "train", "split", "adapt", "invert", "finetune", "paths"});

    RunConfig cfg = default_run_config();
    cfg.n_samples = integer(root, "", "n_samples", cfg.n_samples);
    cfg.seed = uinteger(root, "", "seed", cfg.seed);
    cfg.workers = static_cast<int>(integer(root, "", "workers", cfg.workers));

    if (root.contains("grid")) {
        const json& g = root.at("grid");
        check_keys(g, "grid", {"n_bins", "dt", "t0"});
        cfg.grid.n_bins =
            static_cast<std::int32_t>(integer(g, "grid.", "n_bins", cfg.grid.n_bins));
        cfg.grid.dt = num(g, "grid.", "dt", cfg.grid.dt);
        cfg.grid.t0 = num(g, "grid.", "t0", cfg.grid.t0);
    }

    if (root.contains("ranges")) {
        const json& r = root.at("ranges");
        check_keys(r, "ranges",
                   {"depth", "kd", "i_ref", "i_w", "i_s", "amplitude", "noise_frac",
                    "base_intensity", "w_c", "max_depth"});
        auto& rg = cfg.ranges;
        rg.depth = range(r, "ranges.", "depth", rg.depth);
        rg.kd = range(r, "ranges.", "kd", rg.kd);
        rg.i_ref = range(r, "ranges.", "i_ref", rg.i_ref);
        rg.i_w = range(r, "ranges.", "i_w", rg.i_w);
        rg.i_s = range(r, "ranges.", "i_s", rg.i_s);
        rg.amplitude = range(r, "ranges.", "amplitude", rg.amplitude);
        rg.noise_frac = range(r, "ranges.", "noise_frac", rg.noise_frac);
        rg.base_intensity = range(r, "ranges.", "base_intensity", rg.base_intensity);
        rg.w_c = range(r, "ranges.", "w_c", rg.w_c);
        rg.max_depth = num(r, "ranges.", "max_depth", rg.max_depth);
    }

    if (root.contains("shift")) {
        const json& s = root.at("shift");
        check_keys(s, "shift",
                   {"pulse_substitution", "background_offset", "stretch", "extra_noise"});
        if (s.contains("pulse_substitution")) {
            const json& p = s.at("pulse_substitution");
            if (p.is_null())
                cfg.shift.pulse_substitution.reset();
            else if (p.is_number_integer())
                cfg.shift.pulse_substitution = p.get<std::int64_t>();
            else
                bad("shift.pulse_substitution", "expected an integer or null");
        }
        cfg.shift.background_offset =
            num(s, "shift.", "background_offset", cfg.shift.background_offset);
        cfg.shift.stretch = num(s, "shift.", "stretch", cfg.shift.stretch);
        cfg.shift.extra_noise = num(s, "shift.", "extra_noise", cfg.shift.extra_noise);
    }

    if (root.contains("model")) {
        const json& m = root.at("model");
        check_keys(m, "model",
                   {"convs_per_branch", "pool_every", "kernel_size", "filters",
                    "dense_units", "input_len"});
        auto& mc = cfg.model;
        mc.convs_per_branch =
            integer(m, "model.", "convs_per_branch", mc.convs_per_branch);
        mc.pool_every = integer(m, "model.", "pool_every", mc.pool_every);
        mc.kernel_size = integer(m, "model.", "kernel_size", mc.kernel_size);
        mc.dense_units = integer(m, "model.", "dense_units", mc.dense_units);
        mc.input_len = integer(m, "model.", "input_len", mc.input_len);
        if (m.contains("filters")) {
            const json& f = m.at("filters");
            if (!f.is_array()) bad("model.filters", "expected an array of integers");
            mc.filters.clear();
            for (const json& v : f) {
                if (!v.is_number_integer())
                    bad("model.filters", "expected an array of integers");
                mc.filters.push_back(v.get<std::int64_t>());
            }
        }
    }

    if (root.contains("train")) {
        const json& t = root.at("train");
        check_keys(t, "train",
                   {"batch_size", "max_epochs", "learning_rate", "early_stop_patience",
                    "noise_augment_sigma", "seed"});
        auto& tc = cfg.train;
        tc.batch_size = integer(t, "train.", "batch_size", tc.batch_size);
        tc.max_epochs = integer(t, "train.", "max_epochs", tc.max_epochs);
        tc.learning_rate = num(t, "train.", "learning_rate", tc.learning_rate);
        tc.early_stop_patience =
            integer(t, "train.", "early_stop_patience", tc.early_stop_patience);
        tc.noise_augment_sigma =
            num(t, "train.", "noise_augment_sigma", tc.noise_augment_sigma);
        tc.seed = uinteger(t, "train.", "seed", tc.seed);
    }

    if (root.contains("split")) {
        const json& s = root.at("split");
        check_keys(s, "split", {"train", "val", "test", "seed"});
        cfg.split.ratios[0] = num(s, "split.", "train", cfg.split.ratios[0]);
        cfg.split.ratios[1] = num(s, "split.", "val", cfg.split.ratios[1]);
        cfg.split.ratios[2] = num(s, "split.", "test", cfg.split.ratios[2]);
        cfg.split.seed = uinteger(s, "split.", "seed", cfg.split.seed);
    }

    if (root.contains("adapt")) {
        const json& a = root.at("adapt");
        check_keys(a, "adapt",
                   {"epsilon_scale", "tol", "max_iter", "subsample_cap", "seed"});
        auto& ac = cfg.adapt;
        ac.epsilon_scale = num(a, "adapt.", "epsilon_scale", ac.epsilon_scale);
        ac.tol = num(a, "adapt.", "tol", ac.tol);
        ac.max_iter = integer(a, "adapt.", "max_iter", ac.max_iter);
        ac.subsample_cap = integer(a, "adapt.", "subsample_cap", ac.subsample_cap);
        ac.seed = uinteger(a, "adapt.", "seed", ac.seed);
    }

    if (root.contains("invert")) {
        const json& i = root.at("invert");
        check_keys(i, "invert", {"min_prominence_frac", "pulse_width_hint"});
        cfg.invert.min_prominence_frac =
            num(i, "invert.", "min_prominence_frac", cfg.invert.min_prominence_frac);
        cfg.invert.pulse_width_hint =
            num(i, "invert.", "pulse_width_hint", cfg.invert.pulse_width_hint);
    }

    if (root.contains("finetune")) {
        const json& f = root.at("finetune");
        check_keys(f, "finetune", {"fraction", "lr_scale", "seed"});
        cfg.finetune.fraction = num(f, "finetune.", "fraction", cfg.finetune.fraction);
        cfg.finetune.lr_scale = num(f, "finetune.", "lr_scale", cfg.finetune.lr_scale);
        cfg.finetune.seed = uinteger(f, "finetune.", "seed", cfg.finetune.seed);
    }

    if (root.contains("paths")) {
        const json& p = root.at("paths");
        check_keys(p, "paths",
                   {"in", "out", "model", "model_out", "metrics_csv", "curves_csv",
                    "scatter_csv", "predictions_csv", "source", "target"});
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (!it.value().is_string())
                bad("paths." + it.key(), "expected a string");
            cfg.paths[it.key()] = it.value().get<std::string>();
        }
    }

    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open config: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    if (in.bad()) fail(ErrorCode::IoError, "read failed: " + path);
    return parse_run_config(text.str());
}

} // namespace bwf::io

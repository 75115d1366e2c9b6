#include "bwf/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "bwf/rng.hpp"

namespace bwf::nn {

namespace {

constexpr double kStep = 1e-5;

double rel_err(double a, double f) {
    return std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)});
}

double eval_loss(const Layer& proto, const Tensor& x, const Tensor& g) {
    Layer tmp = proto; // running statistics mutate on the copy only
    LayerCache cache;
    const Tensor y = forward_train(tmp, x, cache);
    double loss = 0.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) loss += g.v[i] * y.v[i];
    return loss;
}

struct Instance {
    Layer layer;
    Tensor x;
};

Instance make_instance(LayerKind kind, rng::Xoshiro256& gen) {
    Instance inst;
    Layer& l = inst.layer;
    l.kind = kind;
    switch (kind) {
    case LayerKind::Conv1d: {
        l.kernel = 3;
        l.in_ch = 2;
        l.out_ch = 3;
        l.w.resize(std::size_t(l.kernel * l.in_ch * l.out_ch));
        l.b.resize(std::size_t(l.out_ch));
        for (double& v : l.w) v = gen.uniform(-1.0, 1.0);
        for (double& v : l.b) v = gen.uniform(-1.0, 1.0);
        inst.x = Tensor(2, 8, l.in_ch);
        for (double& v : inst.x.v) v = gen.uniform(-1.0, 1.0);
        break;
    }
    case LayerKind::Dense: {
        l.in_ch = 5;
        l.out_ch = 3;
        l.w.resize(std::size_t(l.in_ch * l.out_ch));
        l.b.resize(std::size_t(l.out_ch));
        for (double& v : l.w) v = gen.uniform(-1.0, 1.0);
        for (double& v : l.b) v = gen.uniform(-1.0, 1.0);
        inst.x = Tensor(2, 1, l.in_ch);
        for (double& v : inst.x.v) v = gen.uniform(-1.0, 1.0);
        break;
    }
    case LayerKind::BatchNorm: {
        l.in_ch = 2;
        l.out_ch = 2;
        l.gamma.resize(std::size_t(l.in_ch));
        l.beta.resize(std::size_t(l.in_ch));
        for (double& v : l.gamma) v = gen.uniform(0.5, 1.5);
        for (double& v : l.beta) v = gen.uniform(-0.5, 0.5);
        l.run_mean.assign(std::size_t(l.in_ch), 0.0);
        l.run_var.assign(std::size_t(l.in_ch), 1.0);
        inst.x = Tensor(3, 4, l.in_ch);
        for (double& v : inst.x.v) v = gen.uniform(-1.0, 1.0);
        break;
    }
    case LayerKind::Relu: {
        inst.x = Tensor(2, 6, 2);
        // keep well away from the kink at zero
        for (double& v : inst.x.v) {
            v = gen.uniform(0.1, 1.5);
            if (gen.uniform01() < 0.5) v = -v;
        }
        break;
    }
    case LayerKind::MaxPool: {
        inst.x = Tensor(2, 6, 2);
        for (double& v : inst.x.v) v = gen.uniform(-1.0, 1.0);
        // separate every pooled pair so the argmax is stable under the
        // finite-difference step
        for (std::int64_t n = 0; n < inst.x.batch; ++n)
            for (std::int64_t t = 0; t < inst.x.len; t += 2)
                for (std::int64_t c = 0; c < inst.x.ch; ++c) {
                    double& a = inst.x.at(n, t, c);
                    double& b = inst.x.at(n, t + 1, c);
                    if (std::abs(a - b) < 1e-3) b += (b >= a ? 1.0 : -1.0) * 2e-3;
                }
        break;
    }
    case LayerKind::Flatten: {
        inst.x = Tensor(2, 4, 3);
        for (double& v : inst.x.v) v = gen.uniform(-1.0, 1.0);
        break;
    }
    }
    return inst;
}

} // namespace

GradCheckReport run_gradcheck(std::uint64_t seed, std::int64_t instances_per_kind,
                              double tolerance) {
    if (instances_per_kind < 1) fail(ErrorCode::BadConfig, "instances must be >= 1");
    if (!(tolerance > 0.0)) fail(ErrorCode::BadConfig, "tolerance must be > 0");

    constexpr LayerKind kKinds[] = {LayerKind::Conv1d,  LayerKind::BatchNorm,
                                    LayerKind::Relu,    LayerKind::MaxPool,
                                    LayerKind::Flatten, LayerKind::Dense};
    GradCheckReport report;
    report.tolerance = tolerance;

    std::uint64_t stream = 0;
    for (LayerKind kind : kKinds) {
        GradCheckCase result;
        result.kind = kind;
        for (std::int64_t it = 0; it < instances_per_kind; ++it) {
            rng::Xoshiro256 gen(rng::derive_stream(seed, stream++));
            Instance inst = make_instance(kind, gen);

            std::int64_t ob, ol, oc;
            output_shape(inst.layer, inst.x.batch, inst.x.len, inst.x.ch, ob, ol, oc);
            Tensor g(ob, ol, oc);
            for (double& v : g.v) v = gen.uniform(-1.0, 1.0);

            Layer work = inst.layer;
            LayerCache cache;
            forward_train(work, inst.x, cache);
            work.zero_grads();
            const Tensor dx = backward(work, g, cache);

            auto check_block = [&](std::vector<double>& values,
                                   const std::vector<double>& analytic) {
                for (std::size_t i = 0; i < values.size(); ++i) {
                    const double keep = values[i];
                    values[i] = keep + kStep;
                    const double up = eval_loss(inst.layer, inst.x, g);
                    values[i] = keep - kStep;
                    const double dn = eval_loss(inst.layer, inst.x, g);
                    values[i] = keep;
                    const double numeric = (up - dn) / (2.0 * kStep);
                    result.max_rel_err =
                        std::max(result.max_rel_err, rel_err(analytic[i], numeric));
                    ++result.elements;
                }
            };

            check_block(inst.x.v, dx.v);
            check_block(inst.layer.w, work.gw);
            check_block(inst.layer.b, work.gb);
            check_block(inst.layer.gamma, work.ggamma);
            check_block(inst.layer.beta, work.gbeta);
        }
        report.worst = std::max(report.worst, result.max_rel_err);
        report.cases.push_back(result);
    }
    report.pass = report.worst <= tolerance;
    return report;
}

} // namespace bwf::nn

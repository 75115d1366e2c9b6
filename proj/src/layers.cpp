#include "bwf/layers.hpp"

#include <cmath>
#include <string>

namespace bwf::nn {

const char* to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    }
    return "unknown";
}

void Layer::zero_grads() {
    gw.assign(w.size(), 0.0);
    gb.assign(b.size(), 0.0);
    ggamma.assign(gamma.size(), 0.0);
    gbeta.assign(beta.size(), 0.0);
}

void output_shape(const Layer& layer, std::int64_t b, std::int64_t l, std::int64_t c,
                  std::int64_t& ob, std::int64_t& ol, std::int64_t& oc) {
    ob = b;
    switch (layer.kind) {
    case LayerKind::Conv1d:
        if (c != layer.in_ch)
            fail(ErrorCode::ShapeMismatch, "conv1d expects " +
                                               std::to_string(layer.in_ch) +
                                               " channels, got " + std::to_string(c));
        ol = l;
        oc = layer.out_ch;
        break;
    case LayerKind::BatchNorm:
        if (c != layer.in_ch)
            fail(ErrorCode::ShapeMismatch, "batchnorm channel mismatch");
        ol = l;
        oc = c;
        break;
    case LayerKind::Relu:
        ol = l;
        oc = c;
        break;
    case LayerKind::MaxPool:
        if (l % 2 != 0) fail(ErrorCode::ShapeMismatch, "maxpool needs even length");
        ol = l / 2;
        oc = c;
        break;
    case LayerKind::Flatten:
        ol = 1;
        oc = l * c;
        break;
    case LayerKind::Dense:
        if (l != 1 || c != layer.in_ch)
            fail(ErrorCode::ShapeMismatch, "dense expects flat " +
                                               std::to_string(layer.in_ch) + " features");
        ol = 1;
        oc = layer.out_ch;
        break;
    }
}

namespace {

Tensor conv_forward(const Layer& layer, const Tensor& x) {
    const std::int64_t B = x.batch, L = x.len, Cin = layer.in_ch, Cout = layer.out_ch;
    const std::int64_t K = layer.kernel, P = (K - 1) / 2;
    Tensor y(B, L, Cout);
    const double* W = layer.w.data();
    for (std::int64_t n = 0; n < B; ++n) {
        for (std::int64_t t = 0; t < L; ++t) {
            double* yr = &y.v[size_t((n * L + t) * Cout)];
            for (std::int64_t co = 0; co < Cout; ++co) yr[co] = layer.b[size_t(co)];
            for (std::int64_t k = 0; k < K; ++k) {
                const std::int64_t s = t + k - P;
                if (s < 0 || s >= L) continue;
                const double* xr = &x.v[size_t((n * L + s) * Cin)];
                const double* wk = W + size_t(k * Cin * Cout);
                for (std::int64_t ci = 0; ci < Cin; ++ci) {
                    const double xv = xr[ci];
                    const double* wrow = wk + size_t(ci * Cout);
                    for (std::int64_t co = 0; co < Cout; ++co) yr[co] += xv * wrow[co];
                }
            }
        }
    }
    return y;
}

Tensor conv_backward(Layer& layer, const Tensor& dY, const Tensor& x) {
    const std::int64_t B = x.batch, L = x.len, Cin = layer.in_ch, Cout = layer.out_ch;
    const std::int64_t K = layer.kernel, P = (K - 1) / 2;
    Tensor dX(B, L, Cin);
    const double* W = layer.w.data();
    for (std::int64_t n = 0; n < B; ++n) {
        for (std::int64_t t = 0; t < L; ++t) {
            const double* gr = &dY.v[size_t((n * L + t) * Cout)];
            for (std::int64_t co = 0; co < Cout; ++co) layer.gb[size_t(co)] += gr[co];
            for (std::int64_t k = 0; k < K; ++k) {
                const std::int64_t s = t + k - P;
                if (s < 0 || s >= L) continue;
                const double* xr = &x.v[size_t((n * L + s) * Cin)];
                double* dxr = &dX.v[size_t((n * L + s) * Cin)];
                const double* wk = W + size_t(k * Cin * Cout);
                double* gwk = layer.gw.data() + size_t(k * Cin * Cout);
                for (std::int64_t ci = 0; ci < Cin; ++ci) {
                    const double xv = xr[ci];
                    const double* wrow = wk + size_t(ci * Cout);
                    double* gwrow = gwk + size_t(ci * Cout);
                    double acc = 0.0;
                    for (std::int64_t co = 0; co < Cout; ++co) {
                        acc += gr[co] * wrow[co];
                        gwrow[co] += xv * gr[co];
                    }
                    dxr[ci] += acc;
                }
            }
        }
    }
    return dX;
}

Tensor dense_forward(const Layer& layer, const Tensor& x) {
    const std::int64_t B = x.batch, F = layer.in_ch, U = layer.out_ch;
    Tensor y(B, 1, U);
    for (std::int64_t n = 0; n < B; ++n) {
        double* yr = &y.v[size_t(n * U)];
        for (std::int64_t u = 0; u < U; ++u) yr[u] = layer.b[size_t(u)];
        const double* xr = &x.v[size_t(n * F)];
        for (std::int64_t f = 0; f < F; ++f) {
            const double xv = xr[f];
            const double* wr = &layer.w[size_t(f * U)];
            for (std::int64_t u = 0; u < U; ++u) yr[u] += xv * wr[u];
        }
    }
    return y;
}

Tensor dense_backward(Layer& layer, const Tensor& dY, const Tensor& x) {
    const std::int64_t B = x.batch, F = layer.in_ch, U = layer.out_ch;
    Tensor dX(B, 1, F);
    for (std::int64_t n = 0; n < B; ++n) {
        const double* gr = &dY.v[size_t(n * U)];
        for (std::int64_t u = 0; u < U; ++u) layer.gb[size_t(u)] += gr[u];
        const double* xr = &x.v[size_t(n * F)];
        double* dxr = &dX.v[size_t(n * F)];
        for (std::int64_t f = 0; f < F; ++f) {
            const double xv = xr[f];
            const double* wr = &layer.w[size_t(f * U)];
            double* gwr = &layer.gw[size_t(f * U)];
            double acc = 0.0;
            for (std::int64_t u = 0; u < U; ++u) {
                acc += gr[u] * wr[u];
                gwr[u] += xv * gr[u];
            }
            dxr[f] = acc;
        }
    }
    return dX;
}

} // namespace

Tensor forward_train(Layer& layer, const Tensor& x, LayerCache& cache) {
    std::int64_t ob, ol, oc;
    output_shape(layer, x.batch, x.len, x.ch, ob, ol, oc);
    cache = LayerCache{};
    cache.out_batch = ob;
    cache.out_len = ol;
    cache.out_ch = oc;

    switch (layer.kind) {
    case LayerKind::Conv1d: {
        cache.x = x;
        cache.valid = true;
        return conv_forward(layer, x);
    }
    case LayerKind::Dense: {
        cache.x = x;
        cache.valid = true;
        return dense_forward(layer, x);
    }
    case LayerKind::BatchNorm: {
        const std::int64_t C = x.ch;
        const std::int64_t rows = x.batch * x.len;
        const double N = static_cast<double>(rows);
        std::vector<double> mean(size_t(C), 0.0), var(size_t(C), 0.0);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* xr = &x.v[size_t(r * C)];
            for (std::int64_t c = 0; c < C; ++c) mean[size_t(c)] += xr[c];
        }
        for (std::int64_t c = 0; c < C; ++c) mean[size_t(c)] /= N;
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* xr = &x.v[size_t(r * C)];
            for (std::int64_t c = 0; c < C; ++c) {
                const double d = xr[c] - mean[size_t(c)];
                var[size_t(c)] += d * d;
            }
        }
        for (std::int64_t c = 0; c < C; ++c) var[size_t(c)] /= N;

        cache.mean = mean;
        cache.inv_std.resize(size_t(C));
        for (std::int64_t c = 0; c < C; ++c)
            cache.inv_std[size_t(c)] = 1.0 / std::sqrt(var[size_t(c)] + layer.bn_eps);

        cache.xhat = Tensor(x.batch, x.len, C);
        Tensor y(x.batch, x.len, C);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* xr = &x.v[size_t(r * C)];
            double* hr = &cache.xhat.v[size_t(r * C)];
            double* yr = &y.v[size_t(r * C)];
            for (std::int64_t c = 0; c < C; ++c) {
                hr[c] = (xr[c] - mean[size_t(c)]) * cache.inv_std[size_t(c)];
                yr[c] = layer.gamma[size_t(c)] * hr[c] + layer.beta[size_t(c)];
            }
        }
        const double m = layer.bn_momentum;
        for (std::int64_t c = 0; c < C; ++c) {
            layer.run_mean[size_t(c)] =
                (1.0 - m) * layer.run_mean[size_t(c)] + m * mean[size_t(c)];
            layer.run_var[size_t(c)] =
                (1.0 - m) * layer.run_var[size_t(c)] + m * var[size_t(c)];
        }
        cache.valid = true;
        return y;
    }
    case LayerKind::Relu: {
        Tensor y(x.batch, x.len, x.ch);
        cache.mask.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const bool on = x.v[i] > 0.0;
            cache.mask[i] = on ? 1 : 0;
            y.v[i] = on ? x.v[i] : 0.0;
        }
        cache.valid = true;
        return y;
    }
    case LayerKind::MaxPool: {
        const std::int64_t B = x.batch, L = x.len, C = x.ch, Lo = L / 2;
        Tensor y(B, Lo, C);
        cache.argmax.resize(y.size());
        for (std::int64_t n = 0; n < B; ++n)
            for (std::int64_t to = 0; to < Lo; ++to) {
                const double* x0 = &x.v[size_t((n * L + 2 * to) * C)];
                const double* x1 = x0 + C;
                double* yr = &y.v[size_t((n * Lo + to) * C)];
                std::uint8_t* arg = &cache.argmax[size_t((n * Lo + to) * C)];
                for (std::int64_t c = 0; c < C; ++c) {
                    if (x0[c] >= x1[c]) { // ties pick the earlier position
                        yr[c] = x0[c];
                        arg[c] = 0;
                    } else {
                        yr[c] = x1[c];
                        arg[c] = 1;
                    }
                }
            }
        cache.valid = true;
        return y;
    }
    case LayerKind::Flatten: {
        Tensor y = x;
        y.len = 1;
        y.ch = x.len * x.ch;
        cache.out_len = 1;
        cache.out_ch = y.ch;
        // remember original shape for backward
        cache.mean = {double(x.len), double(x.ch)};
        cache.valid = true;
        return y;
    }
    }
    fail(ErrorCode::BadConfig, "unknown layer kind");
}

Tensor forward_infer(const Layer& layer, const Tensor& x) {
    std::int64_t ob, ol, oc;
    output_shape(layer, x.batch, x.len, x.ch, ob, ol, oc);

    switch (layer.kind) {
    case LayerKind::Conv1d: return conv_forward(layer, x);
    case LayerKind::Dense: return dense_forward(layer, x);
    case LayerKind::BatchNorm: {
        const std::int64_t C = x.ch;
        std::vector<double> scale(static_cast<std::size_t>(C));
        std::vector<double> shift(static_cast<std::size_t>(C));
        for (std::int64_t c = 0; c < C; ++c) {
            const double inv = 1.0 / std::sqrt(layer.run_var[size_t(c)] + layer.bn_eps);
            scale[size_t(c)] = layer.gamma[size_t(c)] * inv;
            shift[size_t(c)] =
                layer.beta[size_t(c)] - layer.run_mean[size_t(c)] * scale[size_t(c)];
        }
        Tensor y(x.batch, x.len, C);
        const std::int64_t rows = x.batch * x.len;
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* xr = &x.v[size_t(r * C)];
            double* yr = &y.v[size_t(r * C)];
            for (std::int64_t c = 0; c < C; ++c)
                yr[c] = scale[size_t(c)] * xr[c] + shift[size_t(c)];
        }
        return y;
    }
    case LayerKind::Relu: {
        Tensor y(x.batch, x.len, x.ch);
        for (std::size_t i = 0; i < x.size(); ++i) y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
        return y;
    }
    case LayerKind::MaxPool: {
        const std::int64_t B = x.batch, L = x.len, C = x.ch, Lo = L / 2;
        Tensor y(B, Lo, C);
        for (std::int64_t n = 0; n < B; ++n)
            for (std::int64_t to = 0; to < Lo; ++to) {
                const double* x0 = &x.v[size_t((n * L + 2 * to) * C)];
                const double* x1 = x0 + C;
                double* yr = &y.v[size_t((n * Lo + to) * C)];
                for (std::int64_t c = 0; c < C; ++c)
                    yr[c] = x0[c] >= x1[c] ? x0[c] : x1[c];
            }
        return y;
    }
    case LayerKind::Flatten: {
        Tensor y = x;
        y.len = 1;
        y.ch = x.len * x.ch;
        return y;
    }
    }
    fail(ErrorCode::BadConfig, "unknown layer kind");
}

Tensor backward(Layer& layer, const Tensor& grad_out, const LayerCache& cache) {
    if (!cache.valid) fail(ErrorCode::MissingCache, "backward without forward cache");
    if (grad_out.batch != cache.out_batch || grad_out.len != cache.out_len ||
        grad_out.ch != cache.out_ch)
        fail(ErrorCode::MissingCache, "cache does not match upstream gradient shape");

    switch (layer.kind) {
    case LayerKind::Conv1d: return conv_backward(layer, grad_out, cache.x);
    case LayerKind::Dense: return dense_backward(layer, grad_out, cache.x);
    case LayerKind::BatchNorm: {
        const Tensor& xhat = cache.xhat;
        const std::int64_t C = xhat.ch;
        const std::int64_t rows = xhat.batch * xhat.len;
        const double N = static_cast<double>(rows);
        std::vector<double> sum_g(size_t(C), 0.0), sum_gh(size_t(C), 0.0);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* gr = &grad_out.v[size_t(r * C)];
            const double* hr = &xhat.v[size_t(r * C)];
            for (std::int64_t c = 0; c < C; ++c) {
                sum_g[size_t(c)] += gr[c];
                sum_gh[size_t(c)] += gr[c] * hr[c];
            }
        }
        for (std::int64_t c = 0; c < C; ++c) {
            layer.gbeta[size_t(c)] += sum_g[size_t(c)];
            layer.ggamma[size_t(c)] += sum_gh[size_t(c)];
        }
        Tensor dX(xhat.batch, xhat.len, C);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* gr = &grad_out.v[size_t(r * C)];
            const double* hr = &xhat.v[size_t(r * C)];
            double* dx = &dX.v[size_t(r * C)];
            for (std::int64_t c = 0; c < C; ++c) {
                const double dxhat = gr[c] * layer.gamma[size_t(c)];
                const double term = N * dxhat -
                                    layer.gamma[size_t(c)] * sum_g[size_t(c)] -
                                    hr[c] * layer.gamma[size_t(c)] * sum_gh[size_t(c)];
                dx[c] = cache.inv_std[size_t(c)] / N * term;
            }
        }
        return dX;
    }
    case LayerKind::Relu: {
        Tensor dX(grad_out.batch, grad_out.len, grad_out.ch);
        for (std::size_t i = 0; i < grad_out.size(); ++i)
            dX.v[i] = cache.mask[i] ? grad_out.v[i] : 0.0;
        return dX;
    }
    case LayerKind::MaxPool: {
        const std::int64_t B = grad_out.batch, Lo = grad_out.len, C = grad_out.ch;
        Tensor dX(B, Lo * 2, C);
        for (std::int64_t n = 0; n < B; ++n)
            for (std::int64_t to = 0; to < Lo; ++to) {
                const double* gr = &grad_out.v[size_t((n * Lo + to) * C)];
                const std::uint8_t* arg = &cache.argmax[size_t((n * Lo + to) * C)];
                double* dx = &dX.v[size_t((n * Lo * 2 + 2 * to) * C)];
                for (std::int64_t c = 0; c < C; ++c) dx[size_t(arg[c]) * size_t(C) + size_t(c)] = gr[c];
            }
        return dX;
    }
    case LayerKind::Flatten: {
        Tensor dX = grad_out;
        dX.len = static_cast<std::int64_t>(cache.mean[0]);
        dX.ch = static_cast<std::int64_t>(cache.mean[1]);
        return dX;
    }
    }
    fail(ErrorCode::BadConfig, "unknown layer kind");
}

} // namespace bwf::nn

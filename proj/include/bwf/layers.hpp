#pragma once

#include <cstdint>
#include <vector>

#include "bwf/tensor.hpp"

namespace bwf::nn {

enum class LayerKind : std::uint32_t {
    Conv1d = 0,
    BatchNorm = 1,
    Relu = 2,
    MaxPool = 3,
    Flatten = 4,
    Dense = 5,
};

const char* to_string(LayerKind kind);

/// One network layer: parameters plus gradient accumulators. Kind-specific
/// fields:
///   Conv1d    — kernel (odd), in_ch, out_ch; w[k][ci][co] ("same" zero
///               padding, stride 1, cross-correlation), b[co]
///   BatchNorm — in_ch channels; gamma/beta trainable, run_mean/run_var
///               running statistics (momentum update in train mode)
///   Dense     — in_ch input features, out_ch units; w[f][u], b[u]
///   MaxPool   — size 2, stride 2 (requires even length)
///   Relu/Flatten — stateless
struct Layer {
    LayerKind kind = LayerKind::Relu;
    std::int64_t kernel = 0;
    std::int64_t in_ch = 0;
    std::int64_t out_ch = 0;

    std::vector<double> w, b;
    std::vector<double> gamma, beta, run_mean, run_var;
    double bn_eps = 1e-5;
    double bn_momentum = 0.1;

    // gradient accumulators, shapes matching w/b/gamma/beta
    std::vector<double> gw, gb, ggamma, gbeta;

    void zero_grads();
};

/// Cached intermediates from one train-mode forward call, consumed by the
/// matching backward call.
struct LayerCache {
    bool valid = false;
    Tensor x;                      // conv/dense/batchnorm input
    Tensor xhat;                   // batchnorm normalized input
    std::vector<double> mean;      // batchnorm batch mean per channel
    std::vector<double> inv_std;   // batchnorm 1/sqrt(var + eps)
    std::vector<std::uint8_t> mask;    // relu activity per element
    std::vector<std::uint8_t> argmax;  // maxpool winner offset (0/1) per output
    std::int64_t out_batch = 0, out_len = 0, out_ch = 0;
};

/// Output shape of a layer for a given input shape; throws ShapeMismatch if
/// the input does not chain.
void output_shape(const Layer& layer, std::int64_t b, std::int64_t l, std::int64_t c,
                  std::int64_t& ob, std::int64_t& ol, std::int64_t& oc);

/// Train-mode forward: records the cache and (for batch-norm) updates running
/// statistics with batch mean / biased batch variance.
Tensor forward_train(Layer& layer, const Tensor& x, LayerCache& cache);

/// Infer-mode forward: pure function of layer parameters; batch-norm uses
/// running statistics, so rows are independent of the rest of the batch.
Tensor forward_infer(const Layer& layer, const Tensor& x);

/// Exact analytic gradients of the train-mode forward definitions.
/// Accumulates parameter gradients into the layer's gw/gb/ggamma/gbeta and
/// returns the input gradient. Throws MissingCache when the cache is absent
/// or does not match the upstream gradient's shape.
Tensor backward(Layer& layer, const Tensor& grad_out, const LayerCache& cache);

} // namespace bwf::nn

#pragma once

#include <cstdint>
#include <vector>

#include "bwf/errors.hpp"

namespace bwf::nn {

/// Dense (batch, length, channels) tensor of 64-bit reals, channel-innermost.
/// Flat feature tensors use length == 1.
struct Tensor {
    std::int64_t batch = 0;
    std::int64_t len = 0;
    std::int64_t ch = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(std::int64_t b, std::int64_t l, std::int64_t c)
        : batch(b), len(l), ch(c), v(static_cast<std::size_t>(b * l * c), 0.0) {
        if (b < 0 || l < 0 || c < 0) fail(ErrorCode::ShapeMismatch, "negative dimension");
    }

    static Tensor zeros(std::int64_t b, std::int64_t l, std::int64_t c) {
        return Tensor(b, l, c);
    }

    std::size_t size() const { return v.size(); }

    double& at(std::int64_t n, std::int64_t t, std::int64_t c) {
        return v[static_cast<std::size_t>((n * len + t) * ch + c)];
    }
    double at(std::int64_t n, std::int64_t t, std::int64_t c) const {
        return v[static_cast<std::size_t>((n * len + t) * ch + c)];
    }

    bool same_shape(const Tensor& o) const {
        return batch == o.batch && len == o.len && ch == o.ch;
    }
};

} // namespace bwf::nn

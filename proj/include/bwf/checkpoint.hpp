#pragma once

#include <string>

#include "bwf/model.hpp"

namespace bwf::io {

/// Model checkpoint format, little-endian throughout ("BWNN").
///
///   magic "BWNN", u32 version (1), u64 init_seed,
///   i64 convs_per_branch, pool_every, kernel_size, dense_units, input_len,
///   i64 filter count + that many i64 filters,
///   i64 branch count, then per branch:
///     i64 layer count, then per layer:
///       u32 kind, i64 kernel, i64 in_ch, i64 out_ch, f64 bn_eps,
///       f64 bn_momentum, and six arrays (w, b, gamma, beta, run_mean,
///       run_var), each u64 count + f64 data,
///   u32 CRC-32 of every preceding byte.
///
/// save_model / load_model round-trip bit-exactly (weights and running
/// statistics are 64-bit and copied verbatim).
void save_model(const nn::Model& m, const std::string& path);

/// Rebuilds the architecture from the stored config and requires the stored
/// layers to match it exactly; rejects corrupt files via BadMagic,
/// VersionUnsupported, TruncatedFile, CountMismatch and ChecksumMismatch.
nn::Model load_model(const std::string& path);

} // namespace bwf::io

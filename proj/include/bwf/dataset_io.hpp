#pragma once

#include <string>

#include "bwf/core.hpp"

namespace bwf::io {

/// Dataset container format, little-endian throughout ("BWF1").
///
/// Header (52 bytes):
///   offset  0  4 bytes  magic "BWF1"
///   offset  4  u32      version (currently 1)
///   offset  8  u64      n_samples
///   offset 16  u32      n_bins
///   offset 20  u8       split tag (0 unsplit, 1 train, 2 val, 3 test)
///   offset 21  u8[3]    reserved, zero
///   offset 24  f64      dt seconds
///   offset 32  f64      t0 seconds
///   offset 40  u64      generator seed
///   offset 48  u32      CRC-32 of bytes [0, 48)
/// Records, n_samples times:
///   9 f64  depth, kd, i_ref, i_w, i_s, amplitude, noise_sigma,
///          base_intensity, w_c
///   i64    imp_type
///   f64    max_depth
///   n_bins f32 samples
///
/// write_dataset / read_dataset round-trip bitwise on params and samples.
void write_dataset(const Dataset& ds, const std::string& path);

/// Validates magic (BadMagic), version (VersionUnsupported), header checksum
/// (ChecksumMismatch), exact file size (TruncatedFile when short or the
/// declared count exceeds the payload, CountMismatch when trailing bytes
/// remain) and record finiteness (NonFiniteData).
Dataset read_dataset(const std::string& path);

} // namespace bwf::io

#include "bwf/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <zlib.h>

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

namespace bwf::io {

namespace {

constexpr char kMagic[4] = {'B', 'W', 'F', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 52;
constexpr std::size_t kParamsSize = 88;

template <typename T>
void put(std::vector<std::uint8_t>& buf, T value) {
    const std::size_t at = buf.size();
    buf.resize(at + sizeof(T));
    std::memcpy(buf.data() + at, &value, sizeof(T));
}

template <typename T>
T get(const std::uint8_t* p) {
    T value;
    std::memcpy(&value, p, sizeof(T));
    return value;
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

void append_params(std::vector<std::uint8_t>& buf, const WaveformParams& p) {
    put(buf, p.depth);
    put(buf, p.kd);
    put(buf, p.i_ref);
    put(buf, p.i_w);
    put(buf, p.i_s);
    put(buf, p.amplitude);
    put(buf, p.noise_sigma);
    put(buf, p.base_intensity);
    put(buf, p.w_c);
    put(buf, p.imp_type);
    put(buf, p.max_depth);
}

WaveformParams parse_params(const std::uint8_t* p) {
    WaveformParams out;
    out.depth = get<double>(p + 0);
    out.kd = get<double>(p + 8);
    out.i_ref = get<double>(p + 16);
    out.i_w = get<double>(p + 24);
    out.i_s = get<double>(p + 32);
    out.amplitude = get<double>(p + 40);
    out.noise_sigma = get<double>(p + 48);
    out.base_intensity = get<double>(p + 56);
    out.w_c = get<double>(p + 64);
    out.imp_type = get<std::int64_t>(p + 72);
    out.max_depth = get<double>(p + 80);
    return out;
}

bool params_finite(const WaveformParams& p) {
    return std::isfinite(p.depth) && std::isfinite(p.kd) && std::isfinite(p.i_ref) &&
           std::isfinite(p.i_w) && std::isfinite(p.i_s) && std::isfinite(p.amplitude) &&
           std::isfinite(p.noise_sigma) && std::isfinite(p.base_intensity) &&
           std::isfinite(p.w_c) && std::isfinite(p.max_depth);
}

} // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
    ds.grid.validate();
    const auto n_bins = static_cast<std::uint32_t>(ds.grid.n_bins);
    for (const LabeledSample& s : ds.samples)
        if (s.waveform.samples.size() != std::size_t(n_bins))
            fail(ErrorCode::LengthMismatch, "sample length differs from dataset grid");

    std::vector<std::uint8_t> header;
    header.reserve(kHeaderSize);
    header.insert(header.end(), kMagic, kMagic + 4);
    put(header, kVersion);
    put(header, static_cast<std::uint64_t>(ds.samples.size()));
    put(header, n_bins);
    put(header, static_cast<std::uint8_t>(ds.split_tag));
    put(header, std::uint8_t{0});
    put(header, std::uint8_t{0});
    put(header, std::uint8_t{0});
    put(header, ds.grid.dt);
    put(header, ds.grid.t0);
    put(header, ds.seed);
    put(header, crc_of(header.data(), 48));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(header.data()),
              std::streamsize(header.size()));

    std::vector<std::uint8_t> record;
    for (const LabeledSample& s : ds.samples) {
        record.clear();
        append_params(record, s.params);
        const std::size_t at = record.size();
        record.resize(at + std::size_t(n_bins) * 4);
        std::memcpy(record.data() + at, s.waveform.samples.data(),
                    std::size_t(n_bins) * 4);
        out.write(reinterpret_cast<const char*>(record.data()),
                  std::streamsize(record.size()));
    }
    out.flush();
    if (!out) fail(ErrorCode::IoError, "write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open for reading: " + path);

    std::error_code ec;
    const std::uintmax_t file_size = std::filesystem::file_size(path, ec);
    if (ec) fail(ErrorCode::IoError, "cannot stat: " + path);
    if (file_size < kHeaderSize)
        fail(ErrorCode::TruncatedFile, "file shorter than the header");

    std::uint8_t header[kHeaderSize];
    in.read(reinterpret_cast<char*>(header), kHeaderSize);
    if (!in) fail(ErrorCode::TruncatedFile, "header read failed");

    if (std::memcmp(header, kMagic, 4) != 0)
        fail(ErrorCode::BadMagic, "not a BWF1 file");
    const auto version = get<std::uint32_t>(header + 4);
    if (version != kVersion)
        fail(ErrorCode::VersionUnsupported,
             "unsupported version " + std::to_string(version));
    const auto stored_crc = get<std::uint32_t>(header + 48);
    if (stored_crc != crc_of(header, 48))
        fail(ErrorCode::ChecksumMismatch, "header checksum mismatch");

    const auto n_samples = get<std::uint64_t>(header + 8);
    const auto n_bins = get<std::uint32_t>(header + 16);
    const auto split = get<std::uint8_t>(header + 20);
    const double dt = get<double>(header + 24);
    const double t0 = get<double>(header + 32);
    const auto seed = get<std::uint64_t>(header + 40);

    if (n_bins == 0 || n_bins > std::uint32_t(INT32_MAX) || !(dt > 0.0) ||
        !std::isfinite(dt) || !std::isfinite(t0))
        fail(ErrorCode::InvalidParams, "header declares an invalid grid");
    if (split > 3) fail(ErrorCode::InvalidParams, "header declares an invalid split tag");

    const std::uint64_t record_size = kParamsSize + std::uint64_t(n_bins) * 4;
    if (n_samples > (UINT64_MAX - kHeaderSize) / record_size)
        fail(ErrorCode::TruncatedFile, "declared count exceeds any possible payload");
    const std::uint64_t expected = kHeaderSize + n_samples * record_size;
    if (file_size < expected)
        fail(ErrorCode::TruncatedFile, "payload shorter than the declared count");
    if (file_size > expected)
        fail(ErrorCode::CountMismatch, "trailing bytes after the declared records");

    Dataset ds;
    ds.grid = TimeGrid{static_cast<std::int32_t>(n_bins), dt, t0};
    ds.seed = seed;
    ds.split_tag = static_cast<SplitTag>(split);
    ds.samples.resize(std::size_t(n_samples));

    std::vector<std::uint8_t> record(static_cast<std::size_t>(record_size));
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        in.read(reinterpret_cast<char*>(record.data()), std::streamsize(record.size()));
        if (!in) fail(ErrorCode::TruncatedFile, "record read failed");
        LabeledSample& s = ds.samples[std::size_t(i)];
        s.params = parse_params(record.data());
        if (!params_finite(s.params))
            fail(ErrorCode::NonFiniteData,
                 "record " + std::to_string(i) + " has non-finite params");
        s.waveform.grid = ds.grid;
        s.waveform.samples.resize(n_bins);
        std::memcpy(s.waveform.samples.data(), record.data() + kParamsSize,
                    std::size_t(n_bins) * 4);
        for (float v : s.waveform.samples)
            if (!std::isfinite(v))
                fail(ErrorCode::NonFiniteData,
                     "record " + std::to_string(i) + " has non-finite samples");
    }
    return ds;
}

} // namespace bwf::io

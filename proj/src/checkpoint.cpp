#include "bwf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <zlib.h>

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

namespace bwf::io {

namespace {

constexpr char kMagic[4] = {'B', 'W', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<std::uint8_t>& buf, T value) {
    const std::size_t at = buf.size();
    buf.resize(at + sizeof(T));
    std::memcpy(buf.data() + at, &value, sizeof(T));
}

void put_array(std::vector<std::uint8_t>& buf, const std::vector<double>& a) {
    put(buf, static_cast<std::uint64_t>(a.size()));
    const std::size_t at = buf.size();
    buf.resize(at + a.size() * 8);
    std::memcpy(buf.data() + at, a.data(), a.size() * 8);
}

struct Cursor {
    const std::uint8_t* p;
    std::size_t left;

    template <typename T>
    T take() {
        if (left < sizeof(T)) fail(ErrorCode::TruncatedFile, "checkpoint ends early");
        T value;
        std::memcpy(&value, p, sizeof(T));
        p += sizeof(T);
        left -= sizeof(T);
        return value;
    }

    void take_array(std::vector<double>& into, std::size_t expected) {
        const auto n = take<std::uint64_t>();
        if (n != expected)
            fail(ErrorCode::CountMismatch, "stored array size does not match the "
                                           "architecture declared by the config");
        if (left < n * 8) fail(ErrorCode::TruncatedFile, "checkpoint ends early");
        into.resize(std::size_t(n));
        std::memcpy(into.data(), p, std::size_t(n) * 8);
        p += n * 8;
        left -= n * 8;
    }
};

} // namespace

void save_model(const nn::Model& m, const std::string& path) {
    m.cfg.validate();
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put(buf, kVersion);
    put(buf, m.init_seed);
    put(buf, m.cfg.convs_per_branch);
    put(buf, m.cfg.pool_every);
    put(buf, m.cfg.kernel_size);
    put(buf, m.cfg.dense_units);
    put(buf, m.cfg.input_len);
    put(buf, static_cast<std::int64_t>(m.cfg.filters.size()));
    for (std::int64_t f : m.cfg.filters) put(buf, f);
    put(buf, static_cast<std::int64_t>(m.branches.size()));
    for (const nn::Branch& branch : m.branches) {
        put(buf, static_cast<std::int64_t>(branch.layers.size()));
        for (const nn::Layer& l : branch.layers) {
            put(buf, static_cast<std::uint32_t>(l.kind));
            put(buf, l.kernel);
            put(buf, l.in_ch);
            put(buf, l.out_ch);
            put(buf, l.bn_eps);
            put(buf, l.bn_momentum);
            put_array(buf, l.w);
            put_array(buf, l.b);
            put_array(buf, l.gamma);
            put_array(buf, l.beta);
            put_array(buf, l.run_mean);
            put_array(buf, l.run_var);
        }
    }
    put(buf, static_cast<std::uint32_t>(
                 ::crc32(0L, reinterpret_cast<const Bytef*>(buf.data()),
                         static_cast<uInt>(buf.size()))));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    out.flush();
    if (!out) fail(ErrorCode::IoError, "write failed: " + path);
}

nn::Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open for reading: " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorCode::IoError, "read failed: " + path);
    if (buf.size() < 12) fail(ErrorCode::TruncatedFile, "file shorter than the header");
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        fail(ErrorCode::BadMagic, "not a BWNN file");

    const std::size_t body = buf.size() - 4; // everything before the trailing crc
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, buf.data() + body, 4);
    const auto computed = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(body)));
    if (stored_crc != computed)
        fail(ErrorCode::ChecksumMismatch, "checkpoint checksum mismatch");

    Cursor cur{buf.data() + 4, body - 4};
    const auto version = cur.take<std::uint32_t>();
    if (version != kVersion)
        fail(ErrorCode::VersionUnsupported,
             "unsupported version " + std::to_string(version));

    const auto init_seed = cur.take<std::uint64_t>();
    nn::ModelConfig cfg;
    cfg.convs_per_branch = cur.take<std::int64_t>();
    cfg.pool_every = cur.take<std::int64_t>();
    cfg.kernel_size = cur.take<std::int64_t>();
    cfg.dense_units = cur.take<std::int64_t>();
    cfg.input_len = cur.take<std::int64_t>();
    const auto n_filters = cur.take<std::int64_t>();
    if (n_filters < 0 || n_filters > 4096)
        fail(ErrorCode::CountMismatch, "implausible filter count");
    cfg.filters.resize(std::size_t(n_filters));
    for (auto& f : cfg.filters) f = cur.take<std::int64_t>();
    cfg.validate();

    // The architecture is fully determined by the config; build the skeleton
    // and require the stored layers to match it.
    nn::Model m = nn::build_tribranch(cfg, init_seed);

    const auto n_branches = cur.take<std::int64_t>();
    if (n_branches != std::int64_t(m.branches.size()))
        fail(ErrorCode::CountMismatch, "branch count does not match the config");
    for (nn::Branch& branch : m.branches) {
        const auto n_layers = cur.take<std::int64_t>();
        if (n_layers != std::int64_t(branch.layers.size()))
            fail(ErrorCode::CountMismatch, "layer count does not match the config");
        for (nn::Layer& l : branch.layers) {
            const auto kind = cur.take<std::uint32_t>();
            const auto kernel = cur.take<std::int64_t>();
            const auto in_ch = cur.take<std::int64_t>();
            const auto out_ch = cur.take<std::int64_t>();
            if (kind != static_cast<std::uint32_t>(l.kind) || kernel != l.kernel ||
                in_ch != l.in_ch || out_ch != l.out_ch)
                fail(ErrorCode::CountMismatch,
                     "stored layer shape does not match the config");
            l.bn_eps = cur.take<double>();
            l.bn_momentum = cur.take<double>();
            cur.take_array(l.w, l.w.size());
            cur.take_array(l.b, l.b.size());
            cur.take_array(l.gamma, l.gamma.size());
            cur.take_array(l.beta, l.beta.size());
            cur.take_array(l.run_mean, l.run_mean.size());
            cur.take_array(l.run_var, l.run_var.size());
        }
    }
    if (cur.left != 0)
        fail(ErrorCode::CountMismatch, "trailing bytes after the model payload");
    return m;
}

} // namespace bwf::io

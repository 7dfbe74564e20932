#pragma once

// Binary checkpoint container. Byte layout (all integers little-endian):
//
//   "VTTDCKPT"                     8-byte magic
//   u32 version                    kCheckpointVersion
//   u32 scalar size                4 (float32) or 8 (float64)
//   u64 length, bytes              config text (TvtdConfig::to_text)
//   u64 length, bytes              metadata text, key=value lines
//   u64 blob count
//   per blob: u32 name length, name bytes, u64 rows, u64 cols, rows*cols scalars
//   u64 FNV-1a hash of every preceding byte

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "model.hpp"

namespace vtcode::tvtd {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'V', 'T', 'T', 'D', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
public:
    using Error::Error;
};
class VersionMismatch : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class CorruptCheckpoint : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class ConfigMismatch : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

using Metadata = std::map<std::string, std::string>;

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace detail {

template <class U>
void put(std::string& out, U v) {
    char buf[sizeof(U)];
    std::memcpy(buf, &v, sizeof(U));
    out.append(buf, sizeof(U));
}

inline void put_text(std::string& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out += s;
}

class Reader {
public:
    explicit Reader(const std::string& bytes, std::size_t end) : b_(bytes), end_(end) {}
    template <class U>
    U get() {
        need(sizeof(U));
        U v;
        std::memcpy(&v, b_.data() + pos_, sizeof(U));
        pos_ += sizeof(U);
        return v;
    }
    std::string text(std::size_t len) {
        need(len);
        std::string s = b_.substr(pos_, len);
        pos_ += len;
        return s;
    }
    const char* raw(std::size_t len) {
        need(len);
        const char* p = b_.data() + pos_;
        pos_ += len;
        return p;
    }
    [[nodiscard]] std::size_t pos() const noexcept { return pos_; }

private:
    void need(std::size_t len) const {
        if (len > end_ - pos_) throw CorruptCheckpoint("checkpoint truncated");
    }
    const std::string& b_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

inline std::string metadata_text(const Metadata& meta) {
    std::string s;
    for (const auto& [k, v] : meta) s += k + "=" + v + "\n";
    return s;
}

inline Metadata parse_metadata(const std::string& text) {
    Metadata meta;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CorruptCheckpoint("checkpoint metadata line without '='");
        meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return meta;
}

}  // namespace detail

template <class T>
std::string serialize(const TvtdModel<T>& model, const Metadata& meta = {}) {
    std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put<std::uint32_t>(out, kCheckpointVersion);
    detail::put<std::uint32_t>(out, sizeof(T));
    detail::put_text(out, model.config().to_text());
    detail::put_text(out, detail::metadata_text(meta));
    const auto& blobs = model.layout().blobs();
    detail::put<std::uint64_t>(out, blobs.size());
    for (const auto& b : blobs) {
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
        out += b.name;
        detail::put<std::uint64_t>(out, b.slot.rows);
        detail::put<std::uint64_t>(out, b.slot.cols);
        out.append(reinterpret_cast<const char*>(model.values().data() + b.slot.offset), b.slot.size() * sizeof(T));
    }
    detail::put<std::uint64_t>(out, fnv1a(out));
    return out;
}

template <class T>
struct LoadedCheckpoint {
    TvtdModel<T> model;
    Metadata meta;
};

/// Rebuilds a model from serialized bytes. Scalars stored at the other precision are
/// converted. If expected_n is non-zero the stored code length must match it.
template <class T>
LoadedCheckpoint<T> deserialize(const std::string& bytes, std::size_t expected_n = 0) {
    if (bytes.size() < sizeof(kCheckpointMagic) + 8 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
        throw CorruptCheckpoint("not a TVTD checkpoint (bad magic)");
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored_hash;
    std::memcpy(&stored_hash, bytes.data() + body, 8);
    detail::Reader r(bytes, body);
    r.raw(8);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                              std::to_string(kCheckpointVersion));
    if (fnv1a(bytes.substr(0, body)) != stored_hash) throw CorruptCheckpoint("checkpoint hash mismatch");
    const auto scalar = r.get<std::uint32_t>();
    if (scalar != 4 && scalar != 8) throw CorruptCheckpoint("unsupported scalar size " + std::to_string(scalar));
    const TvtdConfig cfg = TvtdConfig::from_text(r.text(r.get<std::uint64_t>()));
    if (expected_n && cfg.n != expected_n)
        throw ConfigMismatch("checkpoint is for n = " + std::to_string(cfg.n) + ", expected n = " +
                             std::to_string(expected_n));
    Metadata meta = detail::parse_metadata(r.text(r.get<std::uint64_t>()));
    TvtdModel<T> model(cfg);
    const auto count = r.get<std::uint64_t>();
    if (count != model.layout().blobs().size()) throw CorruptCheckpoint("checkpoint blob count does not match config");
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string name = r.text(r.get<std::uint32_t>());
        const auto rows = r.get<std::uint64_t>();
        const auto cols = r.get<std::uint64_t>();
        if (!model.layout().contains(name)) throw CorruptCheckpoint("unknown blob " + name);
        const Slot s = model.layout()[name];
        if (s.rows != rows || s.cols != cols) throw CorruptCheckpoint("blob " + name + " has the wrong shape");
        const char* p = r.raw(rows * cols * scalar);
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (scalar == 4) {
                float v;
                std::memcpy(&v, p + 4 * k, 4);
                model.values()[s.offset + k] = static_cast<T>(v);
            } else {
                double v;
                std::memcpy(&v, p + 8 * k, 8);
                model.values()[s.offset + k] = static_cast<T>(v);
            }
        }
    }
    if (r.pos() != body) throw CorruptCheckpoint("trailing bytes in checkpoint");
    return {std::move(model), std::move(meta)};
}

template <class T>
void save_checkpoint(const TvtdModel<T>& model, const std::string& path, const Metadata& meta = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path);
    const std::string bytes = serialize(model, meta);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for checkpoint " + path);
}

template <class T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path, std::size_t expected_n = 0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize<T>(ss.str(), expected_n);
}

}  // namespace vtcode::tvtd

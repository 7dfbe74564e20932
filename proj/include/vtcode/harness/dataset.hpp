#pragma once

// Corrupted/groundtruth pair datasets and their TSV form: one pair per line,
// corrupted<TAB>groundtruth, both ASCII bitstrings.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "../ids_channel.hpp"
#include "../random.hpp"
#include "../vt_core.hpp"

namespace vtcode::harness {

struct DatasetRow {
    BitWord corrupted;
    BitWord groundtruth;
    bool operator==(const DatasetRow&) const = default;
};

using Dataset = std::vector<DatasetRow>;

inline BitWord random_message(std::size_t y, Rng& rng) {
    BitWord m(y);
    for (std::size_t i = 1; i <= y; ++i) m.set_bit(i, random_bit(rng));
    return m;
}

/// Row i draws its message and corruption from stream i of `seed`, so any prefix of a
/// larger dataset equals the smaller one.
inline Dataset gen_dataset(const VtParams& code, const ChannelSpec& channel, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw ParamError("gen_dataset: count must be >= 1");
    channel.validate();
    Dataset rows;
    rows.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = stream_rng(seed, i);
        BitWord cw = encode(random_message(code.y(), rng), code);
        BitWord r = corrupt(cw, channel, rng).first;
        rows.push_back({std::move(r), std::move(cw)});
    }
    return rows;
}

struct CodebookSplit {
    std::vector<BitWord> train;
    std::vector<BitWord> test;
};

/// Encodes all 2^y messages, shuffles them with `seed` and puts floor(0.8 * 2^y) into the
/// training part. The two parts are disjoint by construction.
inline CodebookSplit split_codebook(const VtParams& code, std::uint64_t seed, double train_fraction = 0.8) {
    if (code.y() > 24) throw ParamError("split_codebook: codebook too large to enumerate (y > 24)");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParamError("split_codebook: fraction must lie in (0, 1)");
    const std::uint64_t size = std::uint64_t{1} << code.y();
    std::vector<BitWord> all;
    all.reserve(size);
    for (std::uint64_t i = 0; i < size; ++i) all.push_back(encode(message_from_index(i, code.y()), code));
    Rng rng = stream_rng(seed, 0x73706c6974ull);
    for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[uniform_below(rng, i)]);
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(size)));
    CodebookSplit s;
    s.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
    return s;
}

/// One corrupted row per codeword, row i corrupted from stream i of `seed`.
inline Dataset corrupt_each(const std::vector<BitWord>& codewords, const ChannelSpec& channel, std::uint64_t seed) {
    channel.validate();
    Dataset rows;
    rows.reserve(codewords.size());
    for (std::size_t i = 0; i < codewords.size(); ++i) {
        Rng rng = stream_rng(seed, i);
        rows.push_back({corrupt(codewords[i], channel, rng).first, codewords[i]});
    }
    return rows;
}

inline void write_tsv(std::ostream& out, const Dataset& rows) {
    for (const auto& r : rows) out << r.corrupted.str() << '\t' << r.groundtruth.str() << '\n';
}

inline void write_tsv(const std::string& path, const Dataset& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    write_tsv(out, rows);
    if (!out) throw Error("write failed for " + path);
}

inline Dataset read_tsv(std::istream& in) {
    Dataset rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw ParseError("dataset line " + std::to_string(lineno) + ": expected two tab-separated columns");
        try {
            rows.push_back({BitWord::parse(line.substr(0, tab)), BitWord::parse(line.substr(tab + 1))});
        } catch (const ParseError& e) {
            throw ParseError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

inline Dataset read_tsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return read_tsv(in);
}

}  // namespace vtcode::harness

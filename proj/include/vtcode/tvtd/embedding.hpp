#pragma once

// Symbol and statistic embeddings of a binary word.
//
// Position i (1-based) owns two learnable vectors, one per symbol; the symbol embedding
// of c gathers e_{i, c_i} for every i. The statistic embedding looks up
// s0 = sum of positions holding 0 and s1 = sum of positions holding 1 in two tables.

#include <utility>

#include "tensor.hpp"

namespace vtcode::tvtd {

class LengthOverflow : public Error {
public:
    using Error::Error;
};

class KeyOverflow : public Error {
public:
    using Error::Error;
};

struct PositionSums {
    std::size_t s0 = 0;
    std::size_t s1 = 0;
};

inline PositionSums position_sums(const BitWord& word, std::size_t prefix = static_cast<std::size_t>(-1)) {
    PositionSums p;
    const std::size_t len = std::min(prefix, word.size());
    for (std::size_t i = 0; i < len; ++i) (word[i] ? p.s1 : p.s0) += i + 1;
    return p;
}

/// Read-only view of one side's embedding tables inside a parameter buffer.
/// Symbol row for (position i, bit b) is 2 * (i - 1) + b.
template <class T>
struct EmbeddingTables {
    const Buffer<T>* values = nullptr;
    Slot symbol;
    Slot stat0;
    Slot stat1;
    bool with_stat = true;

    [[nodiscard]] std::size_t positions() const noexcept { return symbol.rows / 2; }
    [[nodiscard]] std::size_t stat_max() const noexcept { return stat0.rows - 1; }
};

inline std::size_t symbol_row(std::size_t position, int bit) { return 2 * (position - 1) + static_cast<std::size_t>(bit); }

/// One row per bit of `word`: a pure gather, no arithmetic across positions.
template <class T>
Mat<T> symbol_embed(const BitWord& word, const EmbeddingTables<T>& tables) {
    if (word.size() > tables.positions())
        throw LengthOverflow("symbol_embed: word of length " + std::to_string(word.size()) + " exceeds the " +
                             std::to_string(tables.positions()) + "-position table");
    const auto sym = view(*tables.values, tables.symbol);
    Mat<T> out(static_cast<Eigen::Index>(word.size()), sym.cols());
    for (std::size_t i = 0; i < word.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = sym.row(static_cast<Eigen::Index>(symbol_row(i + 1, word[i])));
    return out;
}

/// (stat0[s0], stat1[s1]) as a 2-row matrix.
template <class T>
Mat<T> stat_embed(const BitWord& word, const EmbeddingTables<T>& tables) {
    const auto sums = position_sums(word);
    if (sums.s0 > tables.stat_max() || sums.s1 > tables.stat_max())
        throw KeyOverflow("stat_embed: position sum exceeds the statistic table");
    const auto t0 = view(*tables.values, tables.stat0);
    const auto t1 = view(*tables.values, tables.stat1);
    Mat<T> out(2, t0.cols());
    out.row(0) = t0.row(static_cast<Eigen::Index>(sums.s0));
    out.row(1) = t1.row(static_cast<Eigen::Index>(sums.s1));
    return out;
}

/// concat(statistic pair, symbol rows); just the symbol rows when statistics are disabled.
template <class T>
Mat<T> embed_codeword(const BitWord& word, const EmbeddingTables<T>& tables) {
    Mat<T> sym = symbol_embed(word, tables);
    if (!tables.with_stat) return sym;
    Mat<T> out(sym.rows() + 2, sym.cols());
    out.topRows(2) = stat_embed(word, tables);
    out.bottomRows(sym.rows()) = sym;
    return out;
}

}  // namespace vtcode::tvtd

#pragma once

// Binary Varshamov-Tenengolts codes VT_{a,m}(n) with m = 2n+1.
//
// Positions are 1-based throughout: the checksum of v is sum_{i=1}^{len} i * v_i (mod m).

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "bitword.hpp"

namespace vtcode {

class MessageLengthError : public LengthError {
public:
    using LengthError::LengthError;
};

class UnrepresentableDeficit : public Error {
public:
    using Error::Error;
};

/// ceil(log2 x) for x >= 1, by integer bit length.
constexpr unsigned ceil_log2(std::uint64_t x) noexcept { return x <= 1 ? 0U : static_cast<unsigned>(std::bit_width(x - 1)); }

/// The code family itself: length n, residue a, modulus m = 2n+1.
/// This is all that membership testing and the decoders need.
class VtCode {
public:
    VtCode(std::size_t n, std::size_t a = 0) : n_(n), a_(a), m_(2 * n + 1) {
        if (n < 1) throw ParamError("VtCode: n must be positive");
        if (a >= m_) throw ParamError("VtCode: a must lie in [0, 2n]");
    }

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] std::size_t a() const noexcept { return a_; }
    [[nodiscard]] std::size_t m() const noexcept { return m_; }

    friend bool operator==(const VtCode&, const VtCode&) = default;

private:
    std::size_t n_;
    std::size_t a_;
    std::size_t m_;
};

/// Code family plus the systematic layout: parity bits sit at 2^0, ..., 2^{n-y-2} and at n,
/// message bits fill the remaining positions in ascending order.
class VtParams : public VtCode {
public:
    VtParams(std::size_t n, std::size_t a = 0) : VtCode(n, a) {
        if (std::has_single_bit(n))
            throw ParamError("VtParams: n = " + std::to_string(n) +
                             " is a power of two; the parity deficit is not always representable");
        const unsigned r = ceil_log2(n);
        if (n < r + 2) throw ParamError("VtParams: n too small for a nonempty message");
        y_ = n - r - 1;
        std::vector<bool> is_parity(n + 1, false);
        for (std::size_t p = 1; p < n; p <<= 1) {
            parity_.push_back(p);
            is_parity[p] = true;
        }
        parity_.push_back(n);
        is_parity[n] = true;
        for (std::size_t i = 1; i <= n; ++i)
            if (!is_parity[i]) message_.push_back(i);
        span_ = (std::size_t{1} << r) - 1;
    }

    /// Message length y = n - ceil(log2 n) - 1.
    [[nodiscard]] std::size_t y() const noexcept { return y_; }
    [[nodiscard]] const std::vector<std::size_t>& parity_positions() const noexcept { return parity_; }
    [[nodiscard]] const std::vector<std::size_t>& message_positions() const noexcept { return message_; }
    /// Largest deficit the power-of-two parity slots can absorb: 2^{ceil(log2 n)} - 1.
    [[nodiscard]] std::size_t parity_span() const noexcept { return span_; }

private:
    std::size_t y_ = 0;
    std::size_t span_ = 0;
    std::vector<std::size_t> parity_;
    std::vector<std::size_t> message_;
};

/// (sum_i i * word_i) mod m, any word length.
inline std::size_t checksum(const BitWord& word, const VtCode& code) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < word.size(); ++i)
        if (word[i]) s += i + 1;
    return static_cast<std::size_t>(s % code.m());
}

inline bool is_codeword(const BitWord& word, const VtCode& code) {
    return word.size() == code.n() && checksum(word, code) == code.a();
}

inline BitWord encode(const BitWord& message, const VtParams& params) {
    if (message.size() != params.y())
        throw MessageLengthError("encode: message length " + std::to_string(message.size()) + ", expected " +
                                 std::to_string(params.y()));
    const std::size_t n = params.n();
    const std::size_t m = params.m();
    BitWord v(n);
    std::size_t partial = 0;
    const auto& mp = params.message_positions();
    for (std::size_t k = 0; k < mp.size(); ++k) {
        v.set_bit(mp[k], message[k]);
        if (message[k]) partial += mp[k];
    }
    std::size_t deficit = (params.a() + m - partial % m) % m;
    if (deficit > params.parity_span()) {
        v.set_bit(n, 1);
        deficit -= n;
    }
    if (deficit > params.parity_span())
        throw UnrepresentableDeficit("encode: residual deficit " + std::to_string(deficit) + " exceeds parity span");
    for (std::size_t p = 1; p < n; p <<= 1)
        if (deficit & p) v.set_bit(p, 1);
    return v;
}

inline BitWord extract_message(const BitWord& codeword, const VtParams& params) {
    if (codeword.size() != params.n())
        throw LengthError("extract_message: codeword length " + std::to_string(codeword.size()) + ", expected " +
                          std::to_string(params.n()));
    BitWord u;
    for (std::size_t p : params.message_positions()) u.push_back(codeword.bit(p));
    return u;
}

/// Message whose bits are the y low-order bits of index, most significant first.
inline BitWord message_from_index(std::uint64_t index, std::size_t y) {
    BitWord u(y);
    for (std::size_t k = 0; k < y; ++k) u[k] = static_cast<std::uint8_t>((index >> (y - 1 - k)) & 1U);
    return u;
}

}  // namespace vtcode

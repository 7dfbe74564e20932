#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vtcode {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a word or message does not have the length an operation requires.
class LengthError : public Error {
public:
    using Error::Error;
};

/// Raised when code, channel or model parameters are invalid.
class ParamError : public Error {
public:
    using Error::Error;
};

/// Raised by text parsers on malformed input.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Finite binary sequence. Storage is 0-based; code arithmetic everywhere in the
/// library uses 1-based positions, so bit(i) for i in [1, size()] is provided.
class BitWord {
public:
    BitWord() = default;
    explicit BitWord(std::size_t length) : bits_(length, 0) {}
    BitWord(std::initializer_list<int> bits) {
        bits_.reserve(bits.size());
        for (int b : bits) push_back(b);
    }
    explicit BitWord(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto b : bits_)
            if (b > 1) throw ParseError("BitWord: element is not a bit");
    }

    /// Parses the ASCII form: '0'/'1' characters, position 1 first.
    static BitWord parse(std::string_view text) {
        BitWord w;
        w.bits_.reserve(text.size());
        for (char c : text) {
            if (c == '0' || c == '1')
                w.bits_.push_back(static_cast<std::uint8_t>(c - '0'));
            else
                throw ParseError("BitWord: invalid character '" + std::string(1, c) + "'");
        }
        return w;
    }

    [[nodiscard]] std::string str() const {
        std::string s(bits_.size(), '0');
        for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = static_cast<char>('0' + bits_[i]);
        return s;
    }

    [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }
    [[nodiscard]] bool empty() const noexcept { return bits_.empty(); }

    std::uint8_t operator[](std::size_t i) const noexcept { return bits_[i]; }
    std::uint8_t& operator[](std::size_t i) noexcept { return bits_[i]; }

    /// 1-based access.
    [[nodiscard]] int bit(std::size_t pos) const { return bits_.at(pos - 1); }
    void set_bit(std::size_t pos, int value) { bits_.at(pos - 1) = static_cast<std::uint8_t>(value & 1); }

    void push_back(int b) {
        if (b != 0 && b != 1) throw ParseError("BitWord: element is not a bit");
        bits_.push_back(static_cast<std::uint8_t>(b));
    }

    /// Inserts so that the new bit lands at 1-based position pos (pos in [1, size()+1]).
    void insert_at(std::size_t pos, int b) {
        if (pos < 1 || pos > bits_.size() + 1) throw LengthError("BitWord::insert_at: position out of range");
        bits_.insert(bits_.begin() + static_cast<std::ptrdiff_t>(pos - 1), static_cast<std::uint8_t>(b & 1));
    }
    void erase_at(std::size_t pos) {
        if (pos < 1 || pos > bits_.size()) throw LengthError("BitWord::erase_at: position out of range");
        bits_.erase(bits_.begin() + static_cast<std::ptrdiff_t>(pos - 1));
    }
    void flip(std::size_t pos) { bits_.at(pos - 1) ^= 1U; }

    /// Truncates or zero-pads at the tail to the given length.
    [[nodiscard]] BitWord resized(std::size_t length) const {
        BitWord w = *this;
        w.bits_.resize(length, 0);
        return w;
    }

    [[nodiscard]] std::size_t weight() const noexcept {
        std::size_t w = 0;
        for (auto b : bits_) w += b;
        return w;
    }

    [[nodiscard]] const std::vector<std::uint8_t>& data() const noexcept { return bits_; }
    auto begin() const noexcept { return bits_.begin(); }
    auto end() const noexcept { return bits_.end(); }

    friend bool operator==(const BitWord&, const BitWord&) = default;
    friend auto operator<=>(const BitWord&, const BitWord&) = default;

    friend std::ostream& operator<<(std::ostream& os, const BitWord& w) { return os << w.str(); }

private:
    std::vector<std::uint8_t> bits_;
};

/// Number of positions where two equal-length words differ.
inline std::size_t hamming_distance(const BitWord& a, const BitWord& b) {
    if (a.size() != b.size()) throw LengthError("hamming_distance: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

}  // namespace vtcode

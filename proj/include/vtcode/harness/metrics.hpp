#pragma once

// Bit and frame error counting. Both words are compared over their first n bits; a
// decoded word of the wrong length counts its missing bits as errors.

#include <cmath>
#include <span>

#include "../vt_core.hpp"

namespace vtcode::harness {

struct ErrorCounts {
    std::size_t frames = 0;
    std::size_t frame_errors = 0;
    std::size_t bits = 0;
    std::size_t bit_errors = 0;

    ErrorCounts& operator+=(const ErrorCounts& o) noexcept {
        frames += o.frames;
        frame_errors += o.frame_errors;
        bits += o.bits;
        bit_errors += o.bit_errors;
        return *this;
    }
    [[nodiscard]] double ber() const noexcept { return bits ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 0.0; }
    [[nodiscard]] double fer() const noexcept {
        return frames ? static_cast<double>(frame_errors) / static_cast<double>(frames) : 0.0;
    }
    bool operator==(const ErrorCounts&) const = default;
};

/// Counts one frame. With `positions` set, only those 1-based positions are scored (the
/// message bits, for payload BER); otherwise all n bits of the groundtruth.
inline ErrorCounts score_frame(const BitWord& decoded, const BitWord& truth,
                               std::span<const std::size_t> positions = {}) {
    ErrorCounts c;
    c.frames = 1;
    auto bit_at = [](const BitWord& w, std::size_t pos) { return pos <= w.size() ? w[pos - 1] : -1; };
    if (positions.empty()) {
        for (std::size_t i = 1; i <= truth.size(); ++i) c.bit_errors += bit_at(decoded, i) != truth[i - 1];
        c.bits = truth.size();
    } else {
        for (std::size_t p : positions) c.bit_errors += bit_at(decoded, p) != truth[p - 1];
        c.bits = positions.size();
    }
    c.frame_errors = (c.bit_errors > 0 || decoded.size() != truth.size()) ? 1 : 0;
    return c;
}

/// Half-width of the normal-approximation 95% interval for a proportion.
inline double ci95(double p, std::size_t trials) {
    if (trials == 0) return 0.0;
    return 1.959963984540054 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace vtcode::harness

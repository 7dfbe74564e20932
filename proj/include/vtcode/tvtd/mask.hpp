#pragma once

#include "layers.hpp"

namespace vtcode::tvtd {

/// Query k may attend to key j iff j <= k (no look-ahead) and k - j <= w (local window).
constexpr bool mask_allows(std::size_t k, std::size_t j, std::size_t w) noexcept { return j <= k && k - j <= w; }

/// Additive L x L mask, the sum of the causal and window masks: 0 where attention is
/// allowed, -inf elsewhere. The diagonal is always open, so no row is fully masked.
template <class T = double>
Mat<T> build_masks(std::size_t length, std::size_t window) {
    if (length < 1 || window < 1) throw ParamError("build_masks: length and window must be >= 1");
    Mat<T> m(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(length));
    for (std::size_t k = 0; k < length; ++k)
        for (std::size_t j = 0; j < length; ++j)
            m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = mask_allows(k, j, window) ? T(0) : kMaskedOut<T>;
    return m;
}

}  // namespace vtcode::tvtd

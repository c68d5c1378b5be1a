#pragma once

#include "ldbp/common.hpp"

namespace ldbp::fft {

/// Unnormalized forward DFT, X_k = sum_m x_m exp(-j 2 pi k m / n).
CVec forward(std::span<const cplx> x);

/// Inverse DFT including the 1/n factor.
CVec inverse(std::span<const cplx> x);

/// In-place variants; `x` is overwritten.
void forward_inplace(std::span<cplx> x);
void inverse_inplace(std::span<cplx> x);

} // namespace ldbp::fft

#pragma once

#include "adaconv/image.hpp"

namespace adaconv {

// 10 * log10(1 / MSE) with peak 1.0 over all channels, capped at 99 dB
// (identical frames report the cap).
double psnr(const Frame& a, const Frame& b);

// Root-mean-square difference over all pixels and channels on the 0-255
// scale. Plain RMS, no gradient normalization.
double interpolation_error(const Frame& predicted, const Frame& truth);

}  // namespace adaconv

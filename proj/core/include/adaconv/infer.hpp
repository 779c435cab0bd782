#pragma once

#include <utility>
#include <vector>

#include "adaconv/image.hpp"
#include "adaconv/net.hpp"
#include "adaconv/synth.hpp"

namespace adaconv {

// Zero-pads by (R-1)/2 on every side so every output pixel sees a full
// receptive field.
Frame pad_frame(const Frame& frame, const NetworkConfig& config);

struct StitchPlan {
  int down_convs = 0;
  int shift_factor = 1;                       // 2^down_convs per axis
  std::vector<std::pair<int, int>> shifts;    // (sy, sx), shift_factor^2 entries
  int padded_width = 0, padded_height = 0;
};

StitchPlan make_stitch_plan(const NetworkConfig& config, int frame_width, int frame_height);

// Reference path: one network pass per output pixel.
Frame interpolate_pixelwise(const KernelNet& net, const Frame& i1, const Frame& i2,
                            int threads = 1);

// Fast path: shift_factor^2 full-frame passes produce strided kernel grids
// that are stitched into a dense kernel field before synthesis. Agrees with
// the pixel-wise path to float precision.
Frame interpolate_shift_stitch(const KernelNet& net, const Frame& i1, const Frame& i2,
                               int threads = 1);

// depth 1 -> [midpoint]; depth n recurses on both halves. 2^depth - 1 frames
// ordered by time.
std::vector<Frame> interpolate_recursive(const KernelNet& net, const Frame& i1, const Frame& i2,
                                         int depth, bool pixelwise = false, int threads = 1);

// Estimated kernel for one output pixel of a full-frame interpolation.
KernelPair kernel_at_pixel(const KernelNet& net, const Frame& i1, const Frame& i2, int x, int y);

}  // namespace adaconv

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adaconv/image.hpp"
#include "adaconv/net.hpp"
#include "adaconv/synth.hpp"

namespace adaconv {

// Grayscale heatmap of one sub-kernel; coefficients are scaled by the given
// peak so the two halves of a kernel stay comparable.
Frame render_kernel_heatmap(const Tensor& sub_kernel, float peak);

Frame upscale_nearest(const Frame& frame, int factor);

// Bounding box of coefficients above fraction * peak, with a one-pixel margin.
struct ActiveRegion {
  int x0, y0, x1, y1;  // inclusive
};
ActiveRegion active_region(const Tensor& sub_kernel, float peak, float fraction = 0.01f);

// For every probed pixel writes the two sub-kernel heatmaps, magnified crops
// of their non-zero regions, and a text sidecar with sub-kernel masses and
// centroids into out_dir.
void dump_kernel_heatmaps(const KernelNet& net, const Frame& i1, const Frame& i2,
                          const std::vector<std::pair<int, int>>& pixels,
                          const std::string& out_dir);

}  // namespace adaconv

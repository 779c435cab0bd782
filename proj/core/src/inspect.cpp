#include "adaconv/inspect.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "adaconv/errors.hpp"
#include "adaconv/infer.hpp"

namespace fs = std::filesystem;

namespace adaconv {

Frame render_kernel_heatmap(const Tensor& sub_kernel, float peak) {
  int k = sub_kernel.dim(0);
  Frame out(k, k);
  float scale = peak > 0.f ? 1.f / peak : 0.f;
  for (int y = 0; y < k; ++y)
    for (int x = 0; x < k; ++x) {
      float v = std::clamp(sub_kernel[static_cast<size_t>(y) * k + x] * scale, 0.f, 1.f);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = v;
    }
  return out;
}

Frame upscale_nearest(const Frame& frame, int factor) {
  if (factor < 1) throw ArgumentError("upscale factor must be >= 1");
  Frame out(frame.width * factor, frame.height * factor);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x) out.at(c, y, x) = frame.at(c, y / factor, x / factor);
  return out;
}

ActiveRegion active_region(const Tensor& sub_kernel, float peak, float fraction) {
  int k = sub_kernel.dim(0);
  ActiveRegion r{k, k, -1, -1};
  float cutoff = peak * fraction;
  for (int y = 0; y < k; ++y)
    for (int x = 0; x < k; ++x)
      if (sub_kernel[static_cast<size_t>(y) * k + x] > cutoff) {
        r.x0 = std::min(r.x0, x);
        r.y0 = std::min(r.y0, y);
        r.x1 = std::max(r.x1, x);
        r.y1 = std::max(r.y1, y);
      }
  if (r.x1 < 0) return {0, 0, k - 1, k - 1};
  r.x0 = std::max(0, r.x0 - 1);
  r.y0 = std::max(0, r.y0 - 1);
  r.x1 = std::min(k - 1, r.x1 + 1);
  r.y1 = std::min(k - 1, r.y1 + 1);
  return r;
}

namespace {

Frame crop_frame(const Frame& frame, const ActiveRegion& r) {
  Frame out(r.x1 - r.x0 + 1, r.y1 - r.y0 + 1);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x) out.at(c, y, x) = frame.at(c, r.y0 + y, r.x0 + x);
  return out;
}

void write_zoom(const Frame& heat, const Tensor& sub, float peak, const std::string& path) {
  Frame crop = crop_frame(heat, active_region(sub, peak));
  int factor = std::max(1, (96 + std::max(crop.width, crop.height) - 1) /
                               std::max(crop.width, crop.height));
  save_png(upscale_nearest(crop, factor), path);
}

}  // namespace

void dump_kernel_heatmaps(const KernelNet& net, const Frame& i1, const Frame& i2,
                          const std::vector<std::pair<int, int>>& pixels,
                          const std::string& out_dir) {
  for (auto [x, y] : pixels)
    if (x < 0 || y < 0 || x >= i1.width || y >= i1.height)
      throw ArgumentError("inspect: pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                          ") outside the frame");
  fs::create_directories(out_dir);
  for (auto [x, y] : pixels) {
    KernelPair kernel = kernel_at_pixel(net, i1, i2, x, y);
    float peak = 0.f;
    for (size_t i = 0; i < kernel.k1.size(); ++i) peak = std::max(peak, kernel.k1[i]);
    for (size_t i = 0; i < kernel.k2.size(); ++i) peak = std::max(peak, kernel.k2[i]);

    char stem[64];
    std::snprintf(stem, sizeof(stem), "pixel_%d_%d", x, y);
    fs::path base = fs::path(out_dir) / stem;
    Frame h1 = render_kernel_heatmap(kernel.k1, peak);
    Frame h2 = render_kernel_heatmap(kernel.k2, peak);
    save_png(h1, base.string() + "_k1.png");
    save_png(h2, base.string() + "_k2.png");
    write_zoom(h1, kernel.k1, peak, base.string() + "_k1_zoom.png");
    write_zoom(h2, kernel.k2, peak, base.string() + "_k2_zoom.png");

    auto [m1, m2] = sub_kernel_mass(kernel);
    auto [c1, c2] = kernel_centroids(kernel);
    std::ofstream os(base.string() + ".txt");
    os << "pixel " << x << " " << y << "\n";
    os << "mass1 " << m1 << "\n";
    os << "mass2 " << m2 << "\n";
    if (c1)
      os << "centroid1 " << c1->dx << " " << c1->dy << "\n";
    else
      os << "centroid1 none\n";
    if (c2)
      os << "centroid2 " << c2->dx << " " << c2->dy << "\n";
    else
      os << "centroid2 none\n";
  }
}

}  // namespace adaconv

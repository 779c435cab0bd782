#pragma once

#include <string>
#include <vector>

#include "adaconv/tensor.hpp"

namespace adaconv {

// RGB frame with channel-major float storage, values in [0, 1].
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // [3, height, width]

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), data(static_cast<size_t>(3) * w * h, 0.f) {}

  float& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }

  bool same_size(const Frame& other) const {
    return width == other.width && height == other.height;
  }
};

// 8-bit RGB PNG in, [0, 1] floats out (value / 255). Grayscale, palette and
// alpha inputs are expanded/stripped to RGB; 16-bit depth is rejected.
Frame load_png(const std::string& path);

// round(value * 255) with clamping.
void save_png(const Frame& frame, const std::string& path);

// Channel-major [3, h, w] copy of a frame region; caller guarantees bounds.
Tensor frame_window(const Frame& frame, int x0, int y0, int size);

float gray_value(float r, float g, float b);  // 0.299 R + 0.587 G + 0.114 B

}  // namespace adaconv

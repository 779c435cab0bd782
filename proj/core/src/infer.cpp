#include "adaconv/infer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>

#include "adaconv/errors.hpp"
#include "adaconv/parallel.hpp"

namespace adaconv {

Frame pad_frame(const Frame& frame, const NetworkConfig& config) {
  int pad = config.pad();
  Frame out(frame.width + 2 * pad, frame.height + 2 * pad);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < frame.height; ++y)
      for (int x = 0; x < frame.width; ++x) out.at(c, y + pad, x + pad) = frame.at(c, y, x);
  return out;
}

StitchPlan make_stitch_plan(const NetworkConfig& config, int frame_width, int frame_height) {
  StitchPlan plan;
  plan.down_convs = config.down_convs;
  plan.shift_factor = config.shift_factor();
  plan.padded_width = frame_width + 2 * config.pad();
  plan.padded_height = frame_height + 2 * config.pad();
  for (int sy = 0; sy < plan.shift_factor; ++sy)
    for (int sx = 0; sx < plan.shift_factor; ++sx) plan.shifts.emplace_back(sy, sx);
  return plan;
}

namespace {

struct ConvStep {
  int ksize, stride;
};

std::vector<ConvStep> conv_chain(const KernelNet& net) {
  std::vector<ConvStep> chain;
  for (const auto& l : net.layers)
    if (l.kind == LayerKind::kConv || l.kind == LayerKind::kDownConv)
      chain.push_back({l.conv.kernel_h(), l.conv.stride_h});
  return chain;
}

// Minimal input length for the chain to produce `outputs` positions.
int required_input(const std::vector<ConvStep>& chain, int outputs) {
  int len = outputs;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    len = (len - 1) * it->stride + it->ksize;
  return len;
}

// Concatenated two-frame input [6, h, w] from padded frames.
Tensor joint_input(const Frame& p1, const Frame& p2) {
  Tensor t({6, p1.height, p1.width});
  size_t half = static_cast<size_t>(3) * p1.height * p1.width;
  std::memcpy(t.data(), p1.data.data(), half * sizeof(float));
  std::memcpy(t.data() + half, p2.data.data(), half * sizeof(float));
  return t;
}

void check_pair(const Frame& i1, const Frame& i2) {
  if (!i1.same_size(i2)) throw ShapeError("interpolate: input frames differ in size");
  if (i1.width < 1 || i1.height < 1) throw ShapeError("interpolate: empty frame");
}

// Synthesizes every output pixel from a dense kernel field laid out
// [y][x][kernel_len].
Frame synthesize_frame(const KernelNet& net, const Frame& pad1, const Frame& pad2, int width,
                       int height, const std::vector<float>& field, int threads) {
  int k = net.config.patch_size;
  int kernel_len = net.config.kernel_len();
  int pad = net.config.pad();
  int patch_off = pad - (k - 1) / 2;
  Frame out(width, height);
  parallel_for(height, threads, [&](int y) {
    for (int x = 0; x < width; ++x) {
      const float* flat = field.data() + (static_cast<size_t>(y) * width + x) * kernel_len;
      KernelPair kernel = split_kernel(flat, k);
      PatchPair patches{frame_window(pad1, x + patch_off, y + patch_off, k),
                        frame_window(pad2, x + patch_off, y + patch_off, k)};
      Rgb color = synthesize_pixel(patches, kernel);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = std::clamp(color[c], 0.f, 1.f);
    }
  });
  return out;
}

}  // namespace

Frame interpolate_pixelwise(const KernelNet& net, const Frame& i1, const Frame& i2, int threads) {
  check_pair(i1, i2);
  int r = net.config.receptive_field;
  int kernel_len = net.config.kernel_len();
  Frame pad1 = pad_frame(i1, net.config);
  Frame pad2 = pad_frame(i2, net.config);
  std::vector<float> field(static_cast<size_t>(i1.width) * i1.height * kernel_len);

  size_t half = static_cast<size_t>(3) * r * r;
  for (int y = 0; y < i1.height; ++y) {
    Tensor batch({i1.width, 6, r, r});
    for (int x = 0; x < i1.width; ++x) {
      Tensor w1 = frame_window(pad1, x, y, r);
      Tensor w2 = frame_window(pad2, x, y, r);
      float* dst = batch.data() + static_cast<size_t>(x) * 2 * half;
      std::memcpy(dst, w1.data(), half * sizeof(float));
      std::memcpy(dst + half, w2.data(), half * sizeof(float));
    }
    Tensor kernels = net_infer(net, batch, threads);
    std::memcpy(field.data() + static_cast<size_t>(y) * i1.width * kernel_len, kernels.data(),
                static_cast<size_t>(i1.width) * kernel_len * sizeof(float));
  }
  return synthesize_frame(net, pad1, pad2, i1.width, i1.height, field, threads);
}

Frame interpolate_shift_stitch(const KernelNet& net, const Frame& i1, const Frame& i2,
                               int threads) {
  check_pair(i1, i2);
  int kernel_len = net.config.kernel_len();
  int width = i1.width, height = i1.height;
  Frame pad1 = pad_frame(i1, net.config);
  Frame pad2 = pad_frame(i2, net.config);
  Tensor padded = joint_input(pad1, pad2);
  int padded_h = pad1.height, padded_w = pad1.width;

  StitchPlan plan = make_stitch_plan(net.config, width, height);
  int f = plan.shift_factor;
  std::vector<ConvStep> chain = conv_chain(net);
  std::vector<float> field(static_cast<size_t>(width) * height * kernel_len);
  std::vector<int> written(plan.shifts.size(), 0);
  std::atomic<bool> sparse{false};

  // Each shifted pass writes a disjoint strided subset of the field, so the
  // passes themselves are the parallel unit.
  parallel_for(static_cast<int>(plan.shifts.size()), threads, [&](int si) {
    auto [sy, sx] = plan.shifts[static_cast<size_t>(si)];
    if (sy >= height || sx >= width) return;
    int ny = (height - 1 - sy) / f + 1;
    int nx = (width - 1 - sx) / f + 1;
    int in_h = std::min(required_input(chain, ny), padded_h - sy);
    int in_w = std::min(required_input(chain, nx), padded_w - sx);

    Tensor crop({1, 6, in_h, in_w});
    for (int c = 0; c < 6; ++c)
      for (int y = 0; y < in_h; ++y)
        std::memcpy(crop.data() + (static_cast<size_t>(c) * in_h + y) * in_w,
                    padded.data() + (static_cast<size_t>(c) * padded_h + sy + y) * padded_w + sx,
                    static_cast<size_t>(in_w) * sizeof(float));

    Tensor kernels = net_infer(net, crop, 1);
    int oh = kernels.dim(2), ow = kernels.dim(3);
    if (oh < ny || ow < nx) {
      sparse.store(true);
      return;
    }
    for (int jy = 0; jy < ny; ++jy)
      for (int jx = 0; jx < nx; ++jx) {
        int py = jy * f + sy, px = jx * f + sx;
        float* dst = field.data() + (static_cast<size_t>(py) * width + px) * kernel_len;
        for (int c = 0; c < kernel_len; ++c)
          dst[c] = kernels.data()[(static_cast<size_t>(c) * oh + jy) * ow + jx];
        ++written[static_cast<size_t>(si)];
      }
  });

  if (sparse.load())
    throw StateError("shift-and-stitch produced a sparser grid than planned");
  long long total = 0;
  for (int w : written) total += w;
  if (total != static_cast<long long>(width) * height)
    throw StateError("shift-and-stitch did not cover every output pixel");
  return synthesize_frame(net, pad1, pad2, width, height, field, threads);
}

std::vector<Frame> interpolate_recursive(const KernelNet& net, const Frame& i1, const Frame& i2,
                                         int depth, bool pixelwise, int threads) {
  if (depth < 1) throw ArgumentError("interpolate_recursive: depth must be >= 1");
  Frame mid = pixelwise ? interpolate_pixelwise(net, i1, i2, threads)
                        : interpolate_shift_stitch(net, i1, i2, threads);
  if (depth == 1) return {std::move(mid)};
  std::vector<Frame> left = interpolate_recursive(net, i1, mid, depth - 1, pixelwise, threads);
  std::vector<Frame> right = interpolate_recursive(net, mid, i2, depth - 1, pixelwise, threads);
  std::vector<Frame> out;
  out.reserve(left.size() + 1 + right.size());
  for (auto& frame : left) out.push_back(std::move(frame));
  out.push_back(std::move(mid));
  for (auto& frame : right) out.push_back(std::move(frame));
  return out;
}

KernelPair kernel_at_pixel(const KernelNet& net, const Frame& i1, const Frame& i2, int x, int y) {
  check_pair(i1, i2);
  if (x < 0 || y < 0 || x >= i1.width || y >= i1.height)
    throw ArgumentError("kernel_at_pixel: pixel (" + std::to_string(x) + ", " +
                        std::to_string(y) + ") outside the frame");
  int r = net.config.receptive_field;
  Frame pad1 = pad_frame(i1, net.config);
  Frame pad2 = pad_frame(i2, net.config);
  auto& mut = const_cast<KernelNet&>(net);
  return forward_kernel(mut, frame_window(pad1, x, y, r), frame_window(pad2, x, y, r),
                        Phase::kInfer);
}

}  // namespace adaconv

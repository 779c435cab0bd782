#include <chrono>
#include <cmath>

#include "adaconv/data.hpp"
#include "adaconv/infer.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace adaconv;
using adaconv::test::fill_uniform;

namespace {

NetworkConfig small_d1_config() {
  NetworkConfig c;
  c.receptive_field = 11;
  c.patch_size = 3;
  c.down_convs = 1;
  c.conv_widths = {4, 6, 16};
  c.conv_sizes = {3, 3, 2, 1};
  return c;
}

NetworkConfig small_d2_config() {
  NetworkConfig c;
  c.receptive_field = 23;
  c.patch_size = 7;
  c.down_convs = 2;
  c.conv_widths = {4, 6, 8, 16};
  c.conv_sizes = {3, 3, 3, 2, 1};
  return c;
}

Frame random_frame(int w, int h, uint64_t seed) {
  Frame f(w, h);
  Rng rng(seed);
  for (float& v : f.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
  return f;
}

}  // namespace

TEST_CASE("pad_frame pads by (R-1)/2 with exact zeros") {
  NetworkConfig paper = NetworkConfig::paper_scale();
  CHECK(paper.pad() == 39);
  NetworkConfig desk;  // R = 23
  CHECK(desk.pad() == 11);

  NetworkConfig config = small_d1_config();
  Frame f = random_frame(9, 7, 5);
  Frame padded = pad_frame(f, config);
  CHECK(padded.width == 9 + 2 * 5);
  CHECK(padded.height == 7 + 2 * 5);
  for (int c = 0; c < 3; ++c) {
    for (int x = 0; x < padded.width; ++x) {
      CHECK(padded.at(c, 0, x) == 0.f);
      CHECK(padded.at(c, padded.height - 1, x) == 0.f);
    }
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) CHECK(padded.at(c, y + 5, x + 5) == f.at(c, y, x));
  }
}

TEST_CASE("stitch plans enumerate 2^d shifts per axis") {
  CHECK(make_stitch_plan(NetworkConfig::paper_scale(), 64, 64).shifts.size() == 64);
  CHECK(make_stitch_plan(NetworkConfig::desk(), 64, 64).shifts.size() == 4);
  CHECK(make_stitch_plan(small_d2_config(), 64, 64).shifts.size() == 16);
  StitchPlan plan = make_stitch_plan(NetworkConfig::desk(), 32, 32);
  CHECK(plan.shift_factor == 2);
  CHECK(plan.padded_width == 32 + 22);
}

TEST_CASE("interpolating two identical constant frames") {
  NetworkConfig config = small_d1_config();
  KernelNet net = init_network<float>(config, 3);

  // all-zero frames: every patch value is 0, so the output is exactly 0
  Frame zeros(10, 10);
  Frame out0 = interpolate_pixelwise(net, zeros, zeros);
  for (float v : out0.data) CHECK(v == 0.f);

  // constant 0.5: exact wherever the patch stays inside the frame
  Frame half(12, 12);
  for (float& v : half.data) v = 0.5f;
  Frame out = interpolate_pixelwise(net, half, half);
  int reach = (config.patch_size - 1) / 2;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x) {
        bool interior = x >= reach && y >= reach && x < 12 - reach && y < 12 - reach;
        if (interior)
          CHECK(out.at(c, y, x) == doctest::Approx(0.5f).epsilon(1e-5));
        else
          CHECK(out.at(c, y, x) <= 0.5f + 1e-6f);
      }
}

TEST_CASE("1x1 frames synthesize a single pixel in range") {
  NetworkConfig config = small_d1_config();
  KernelNet net = init_network<float>(config, 4);
  Frame a(1, 1), b(1, 1);
  for (int c = 0; c < 3; ++c) {
    a.at(c, 0, 0) = 0.8f;
    b.at(c, 0, 0) = 0.2f;
  }
  Frame out = interpolate_pixelwise(net, a, b);
  CHECK(out.width == 1);
  CHECK(out.height == 1);
  for (int c = 0; c < 3; ++c) {
    CHECK(out.at(c, 0, 0) >= 0.f);
    CHECK(out.at(c, 0, 0) <= 1.f);
  }
}

TEST_CASE("pixel-wise output respects the per-pixel convex bound") {
  NetworkConfig config = small_d1_config();
  KernelNet net = init_network<float>(config, 6);
  Frame i1 = random_frame(16, 16, 11);
  Frame i2 = random_frame(16, 16, 12);
  Frame out = interpolate_pixelwise(net, i1, i2);
  Frame pad1 = pad_frame(i1, config);
  Frame pad2 = pad_frame(i2, config);
  int k = config.patch_size;
  int off = config.pad() - (k - 1) / 2;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      float lo = 1.f, hi = 0.f;
      for (int c = 0; c < 3; ++c)
        for (int py = 0; py < k; ++py)
          for (int px = 0; px < k; ++px) {
            lo = std::min({lo, pad1.at(c, y + off + py, x + off + px),
                           pad2.at(c, y + off + py, x + off + px)});
            hi = std::max({hi, pad1.at(c, y + off + py, x + off + px),
                           pad2.at(c, y + off + py, x + off + px)});
          }
      for (int c = 0; c < 3; ++c) {
        CHECK(out.at(c, y, x) >= lo - 1e-6f);
        CHECK(out.at(c, y, x) <= hi + 1e-6f);
      }
    }
}

TEST_CASE("shift-and-stitch equals the pixel-wise path") {
  for (int variant = 0; variant < 2; ++variant) {
    NetworkConfig config = variant == 0 ? small_d1_config() : small_d2_config();
    KernelNet net = init_network<float>(config, 100 + static_cast<uint64_t>(variant));
    // include sizes that are not multiples of the shift factor
    for (auto [w, h] : {std::pair{16, 16}, std::pair{9, 13}, std::pair{21, 10}}) {
      Frame i1 = random_frame(w, h, 50 + static_cast<uint64_t>(w));
      Frame i2 = random_frame(w, h, 60 + static_cast<uint64_t>(h));
      Frame ref = interpolate_pixelwise(net, i1, i2);
      Frame fast = interpolate_shift_stitch(net, i1, i2);
      REQUIRE(ref.width == fast.width);
      float max_diff = 0.f;
      for (size_t i = 0; i < ref.data.size(); ++i)
        max_diff = std::max(max_diff, std::fabs(ref.data[i] - fast.data[i]));
      CAPTURE(variant);
      CAPTURE(w);
      CHECK(max_diff < 1e-5f);
    }
  }
}

TEST_CASE("mismatched input frames are rejected") {
  KernelNet net = init_network<float>(small_d1_config(), 2);
  Frame a(8, 8), b(9, 8);
  CHECK_THROWS_AS(interpolate_pixelwise(net, a, b), ShapeError);
  CHECK_THROWS_AS(interpolate_shift_stitch(net, a, b), ShapeError);
}

TEST_CASE("recursive interpolation structure") {
  NetworkConfig config = small_d1_config();
  KernelNet net = init_network<float>(config, 8);
  Frame i1 = random_frame(8, 8, 1);
  Frame i2 = random_frame(8, 8, 2);

  std::vector<Frame> depth1 = interpolate_recursive(net, i1, i2, 1);
  REQUIRE(depth1.size() == 1);
  Frame direct = interpolate_shift_stitch(net, i1, i2);
  CHECK(depth1[0].data == direct.data);

  std::vector<Frame> depth2 = interpolate_recursive(net, i1, i2, 2);
  REQUIRE(depth2.size() == 3);
  CHECK(depth2[1].data == direct.data);

  CHECK(interpolate_recursive(net, i1, i2, 3).size() == 7);
  CHECK_THROWS_AS(interpolate_recursive(net, i1, i2, 0), ArgumentError);
}

TEST_CASE("kernel_at_pixel bounds checking") {
  KernelNet net = init_network<float>(small_d1_config(), 9);
  Frame i1 = random_frame(8, 8, 3);
  CHECK_THROWS_AS(kernel_at_pixel(net, i1, i1, 8, 0), ArgumentError);
  CHECK_THROWS_AS(kernel_at_pixel(net, i1, i1, 0, -1), ArgumentError);
  KernelPair kernel = kernel_at_pixel(net, i1, i1, 3, 4);
  auto [m1, m2] = sub_kernel_mass(kernel);
  CHECK(std::fabs(m1 + m2 - 1.f) < 1e-6f);
}

TEST_CASE("shift-and-stitch is at least 2x faster than pixel-wise at desk scale") {
  KernelNet net = init_network<float>(NetworkConfig::desk(), 10);
  Frame i1 = random_frame(64, 64, 21);
  Frame i2 = random_frame(64, 64, 22);
  auto clock = [] { return std::chrono::steady_clock::now(); };

  auto t0 = clock();
  Frame fast = interpolate_shift_stitch(net, i1, i2);
  auto t1 = clock();
  Frame slow = interpolate_pixelwise(net, i1, i2);
  auto t2 = clock();

  double stitch_s = std::chrono::duration<double>(t1 - t0).count();
  double pixel_s = std::chrono::duration<double>(t2 - t1).count();
  CAPTURE(stitch_s);
  CAPTURE(pixel_s);
  CHECK(pixel_s > 2.0 * stitch_s);

  float max_diff = 0.f;
  for (size_t i = 0; i < fast.data.size(); ++i)
    max_diff = std::max(max_diff, std::fabs(fast.data[i] - slow.data[i]));
  CHECK(max_diff < 1e-5f);
}

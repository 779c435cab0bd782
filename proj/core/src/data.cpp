#include "adaconv/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "adaconv/errors.hpp"
#include "adaconv/tensor_io.hpp"

namespace fs = std::filesystem;

namespace adaconv {

// ---------------------------------------------------------------------------
// Synthetic scenes

namespace {

struct Blob {
  float cx, cy, sigma;
  Color<float> color;  // signed additive contribution
};

struct Scene {
  int width, height;
  Color<float> base;
  std::vector<Blob> bg_blobs;
  std::array<float, 2> bg_shift{0, 0};
  bool has_occluder = false;
  float occ_x0 = 0, occ_y0 = 0, occ_w = 0, occ_h = 0;  // top-left and size at t=0
  std::array<float, 2> occ_shift{0, 0};
  Color<float> occ_base{};
  std::vector<Blob> occ_blobs;  // occluder-local coordinates
  int lb_top = 0, lb_bottom = 0, lb_left = 0, lb_right = 0;
  float ramp = 0.f;  // frame gain 1 + ramp * (2t - 1)

  bool occluder_covers(float x, float y, float t) const {
    if (!has_occluder) return false;
    float ox = occ_x0 + t * occ_shift[0];
    float oy = occ_y0 + t * occ_shift[1];
    return x >= ox && x < ox + occ_w && y >= oy && y < oy + occ_h;
  }
  bool letterboxed(float x, float y) const {
    return x < lb_left || x >= width - lb_right || y < lb_top || y >= height - lb_bottom;
  }
};

// Blob math runs in double so that integer shifts of the blob centers produce
// bit-identical texture values across frames.
void splat_blobs(Frame& frame, const std::vector<Blob>& blobs, double shift_x, double shift_y) {
  for (const Blob& b : blobs) {
    double cx = static_cast<double>(b.cx) + shift_x;
    double cy = static_cast<double>(b.cy) + shift_y;
    double reach = 3.0 * b.sigma;
    int x0 = std::max(0, static_cast<int>(std::floor(cx - reach)));
    int x1 = std::min(frame.width - 1, static_cast<int>(std::ceil(cx + reach)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - reach)));
    int y1 = std::min(frame.height - 1, static_cast<int>(std::ceil(cy + reach)));
    double inv = 1.0 / (2.0 * static_cast<double>(b.sigma) * b.sigma);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        double dx = x - cx, dy = y - cy;
        float w = static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv));
        frame.at(0, y, x) += b.color[0] * w;
        frame.at(1, y, x) += b.color[1] * w;
        frame.at(2, y, x) += b.color[2] * w;
      }
  }
}

Frame render_scene(const Scene& s, float t) {
  Frame frame(s.width, s.height);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) frame.at(c, y, x) = s.base[c];
  splat_blobs(frame, s.bg_blobs, t * s.bg_shift[0], t * s.bg_shift[1]);

  if (s.has_occluder) {
    double ox = static_cast<double>(s.occ_x0) + static_cast<double>(t) * s.occ_shift[0];
    double oy = static_cast<double>(s.occ_y0) + static_cast<double>(t) * s.occ_shift[1];
    int x0 = std::max(0, static_cast<int>(std::ceil(ox)));
    int y0 = std::max(0, static_cast<int>(std::ceil(oy)));
    int x1 = std::min(s.width - 1, static_cast<int>(std::floor(ox + s.occ_w - 1e-6)));
    int y1 = std::min(s.height - 1, static_cast<int>(std::floor(oy + s.occ_h - 1e-6)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        double lx = x - ox, ly = y - oy;
        Color<float> v = s.occ_base;
        for (const Blob& b : s.occ_blobs) {
          double dx = lx - b.cx, dy = ly - b.cy;
          float w = static_cast<float>(
              std::exp(-(dx * dx + dy * dy) / (2.0 * static_cast<double>(b.sigma) * b.sigma)));
          for (int c = 0; c < 3; ++c) v[c] += b.color[c] * w;
        }
        for (int c = 0; c < 3; ++c) frame.at(c, y, x) = v[c];
      }
  }

  float gain = 1.f + s.ramp * (2.f * t - 1.f);
  for (float& v : frame.data) v = std::clamp(v * gain, 0.f, 1.f);

  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x)
        if (s.letterboxed(static_cast<float>(x), static_cast<float>(y)))
          frame.at(c, y, x) = 0.f;
  return frame;
}

// Outer-frame shifts land on the integer grid, so per-side motion of the
// middle frame sits on the half-pixel grid (delta or two-tap kernels). Even
// shifts dominate: their midpoint is exactly representable, while half-pixel
// resampling of sharp texture is limited by the non-negative kernel space.
float draw_shift(Rng& rng, float max_shift) {
  int cap = static_cast<int>(std::floor(max_shift));
  int shift = rng.uniform_int(-cap, cap);
  if (shift % 2 != 0 && rng.bernoulli(0.7)) {
    int nudged = shift + (shift > 0 ? 1 : -1);
    shift = std::abs(nudged) <= cap ? nudged : shift - (shift > 0 ? 1 : -1);
  }
  return static_cast<float>(shift);
}

Scene build_scene(const MotionSpec& spec, Rng& rng) {
  if (spec.max_shift >= static_cast<float>(std::min(spec.width, spec.height)))
    throw ConfigError("motion exceeds frame size");
  Scene s;
  s.width = spec.width;
  s.height = spec.height;
  for (int c = 0; c < 3; ++c) s.base[c] = static_cast<float>(rng.uniform(0.25, 0.75));

  int blob_count = spec.background_blobs + rng.uniform_int(-spec.background_blobs / 5,
                                                           spec.background_blobs / 5);
  for (int i = 0; i < blob_count; ++i) {
    Blob b;
    b.cx = static_cast<float>(rng.uniform(-12.0, spec.width + 12.0));
    b.cy = static_cast<float>(rng.uniform(-12.0, spec.height + 12.0));
    b.sigma = static_cast<float>(rng.uniform(1.2, 7.0));
    for (int c = 0; c < 3; ++c) b.color[c] = static_cast<float>(rng.uniform(-0.4, 0.4));
    s.bg_blobs.push_back(b);
  }

  if (spec.force_static) {
    s.bg_shift = {0.f, 0.f};
  } else if (spec.forced_shift) {
    s.bg_shift = *spec.forced_shift;
  } else {
    s.bg_shift = {draw_shift(rng, spec.max_shift), draw_shift(rng, spec.max_shift)};
  }

  bool occluder =
      spec.force_occluder || (spec.allow_occluder && rng.bernoulli(spec.occluder_probability));
  if (occluder && !spec.force_static) {
    s.has_occluder = true;
    s.occ_w = static_cast<float>(rng.uniform_int(spec.width / 5, (2 * spec.width) / 5));
    s.occ_h = static_cast<float>(rng.uniform_int(spec.height / 5, (2 * spec.height) / 5));
    s.occ_x0 = static_cast<float>(rng.uniform_int(4, spec.width - static_cast<int>(s.occ_w) - 4));
    s.occ_y0 = static_cast<float>(rng.uniform_int(4, spec.height - static_cast<int>(s.occ_h) - 4));
    // Keep the occluder velocity distinct from the background so an occlusion
    // band actually appears.
    if (spec.forced_occluder_shift) {
      s.occ_shift = *spec.forced_occluder_shift;
    } else {
      for (int attempt = 0; attempt < 64; ++attempt) {
        s.occ_shift = {draw_shift(rng, spec.max_shift), draw_shift(rng, spec.max_shift)};
        float rel = std::max(std::fabs(s.occ_shift[0] - s.bg_shift[0]),
                             std::fabs(s.occ_shift[1] - s.bg_shift[1]));
        if (rel >= 2.f) break;
      }
    }
    for (int c = 0; c < 3; ++c) s.occ_base[c] = static_cast<float>(rng.uniform(0.2, 0.8));
    int n = rng.uniform_int(12, 28);
    for (int i = 0; i < n; ++i) {
      Blob b;
      b.cx = static_cast<float>(rng.uniform(0.0, s.occ_w));
      b.cy = static_cast<float>(rng.uniform(0.0, s.occ_h));
      b.sigma = static_cast<float>(rng.uniform(1.0, 5.0));
      for (int c = 0; c < 3; ++c) b.color[c] = static_cast<float>(rng.uniform(-0.4, 0.4));
      s.occ_blobs.push_back(b);
    }
  }

  if (spec.allow_letterbox) {
    double draw = rng.next_double();
    if (draw < spec.margin_probability) {
      // Full static margin. Wider than the receptive-field reach, so next to
      // it the network sees exactly what zero-padded inference shows at frame
      // borders; wider than half a stored patch, so the occlusion band along
      // the margin stays reachable by training-sample centers.
      int width = rng.uniform_int(14, 18);
      s.lb_top = s.lb_bottom = s.lb_left = s.lb_right = width;
    } else if (draw < spec.margin_probability + spec.letterbox_probability) {
      int sides = rng.uniform_int(1, 2);
      for (int i = 0; i < sides; ++i) {
        int width = rng.uniform_int(2, 6);
        switch (rng.uniform_int(0, 3)) {
          case 0: s.lb_top = width; break;
          case 1: s.lb_bottom = width; break;
          case 2: s.lb_left = width; break;
          default: s.lb_right = width; break;
        }
      }
    }
  }

  if (spec.allow_brightness_ramp && rng.bernoulli(spec.ramp_probability))
    s.ramp = static_cast<float>(rng.uniform(0.02, 0.06)) * (rng.bernoulli(0.5) ? 1.f : -1.f);
  return s;
}

MotionTruth scene_truth(const Scene& s) {
  MotionTruth truth;
  truth.width = s.width;
  truth.height = s.height;
  size_t n = static_cast<size_t>(s.width) * s.height;
  truth.flow.assign(n, {0.f, 0.f});
  truth.visible_first.assign(n, 1);
  truth.visible_second.assign(n, 1);
  truth.on_occluder.assign(n, 0);

  auto in_frame = [&](float x, float y) {
    return x >= 0.f && x <= static_cast<float>(s.width - 1) && y >= 0.f &&
           y <= static_cast<float>(s.height - 1);
  };

  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      size_t i = truth.index(x, y);
      float fx = static_cast<float>(x), fy = static_cast<float>(y);
      if (s.letterboxed(fx, fy)) continue;  // static black, visible in both
      if (s.occluder_covers(fx, fy, 0.5f)) {
        truth.on_occluder[i] = 1;
        truth.flow[i] = s.occ_shift;
        float qx = fx - 0.5f * s.occ_shift[0], qy = fy - 0.5f * s.occ_shift[1];
        truth.visible_first[i] = in_frame(qx, qy) && !s.letterboxed(qx, qy);
        qx = fx + 0.5f * s.occ_shift[0];
        qy = fy + 0.5f * s.occ_shift[1];
        truth.visible_second[i] = in_frame(qx, qy) && !s.letterboxed(qx, qy);
      } else {
        truth.flow[i] = s.bg_shift;
        float qx = fx - 0.5f * s.bg_shift[0], qy = fy - 0.5f * s.bg_shift[1];
        truth.visible_first[i] =
            in_frame(qx, qy) && !s.occluder_covers(qx, qy, 0.f) && !s.letterboxed(qx, qy);
        qx = fx + 0.5f * s.bg_shift[0];
        qy = fy + 0.5f * s.bg_shift[1];
        truth.visible_second[i] =
            in_frame(qx, qy) && !s.occluder_covers(qx, qy, 1.f) && !s.letterboxed(qx, qy);
      }
    }
  return truth;
}

}  // namespace

SyntheticClip generate_synthetic_sequence(const MotionSpec& spec, uint64_t seed) {
  Rng rng(seed);
  Scene scene = build_scene(spec, rng);
  SyntheticClip clip;
  clip.triple.f1 = render_scene(scene, 0.f);
  clip.triple.f2 = render_scene(scene, 0.5f);
  clip.triple.f3 = render_scene(scene, 1.f);
  clip.triple.source_id = "synthetic-" + std::to_string(seed);
  clip.truth = scene_truth(scene);
  return clip;
}

std::vector<SyntheticClip> generate_synthetic_corpus(const MotionSpec& spec, int clips,
                                                     uint64_t seed) {
  std::vector<SyntheticClip> out;
  out.reserve(static_cast<size_t>(clips));
  Rng rng(seed);
  for (int i = 0; i < clips; ++i) out.push_back(generate_synthetic_sequence(spec, rng.next_u64()));
  return out;
}

// ---------------------------------------------------------------------------
// Flow, entropy, shot boundaries

namespace {

std::vector<float> to_gray(const Frame& f) {
  std::vector<float> g(static_cast<size_t>(f.width) * f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      g[static_cast<size_t>(y) * f.width + x] =
          gray_value(f.at(0, y, x), f.at(1, y, x), f.at(2, y, x));
  return g;
}

}  // namespace

FlowField block_matching_flow(const Frame& f1, const Frame& f3, int grid_step, int window,
                              int block) {
  if (!f1.same_size(f3)) throw ShapeError("block matching: frame sizes differ");
  if (window < 1) throw ArgumentError("block matching: window must be >= 1");
  if (block < 1 || block % 2 == 0) throw ArgumentError("block matching: block must be odd");
  if (grid_step < 1) throw ArgumentError("block matching: grid step must be >= 1");
  int half = block / 2;
  int margin = half + window;
  if (f1.width < block + 2 * window || f1.height < block + 2 * window)
    throw ConfigError("block matching: frame smaller than block + 2*window");

  std::vector<float> g1 = to_gray(f1), g3 = to_gray(f3);
  int w = f1.width;
  FlowField field;
  double mag_sum = 0.0;
  for (int y = margin; y <= f1.height - 1 - margin; y += grid_step)
    for (int x = margin; x <= f1.width - 1 - margin; x += grid_step) {
      float best_sad = 0.f;
      int best_dx = 0, best_dy = 0, best_mag2 = 0;
      bool first = true;
      for (int dy = -window; dy <= window; ++dy)
        for (int dx = -window; dx <= window; ++dx) {
          float sad = 0.f;
          for (int by = -half; by <= half; ++by) {
            const float* a = g1.data() + static_cast<size_t>(y + by) * w + (x - half);
            const float* b = g3.data() + static_cast<size_t>(y + dy + by) * w + (x + dx - half);
            for (int bx = 0; bx < block; ++bx) sad += std::fabs(a[bx] - b[bx]);
          }
          int mag2 = dx * dx + dy * dy;
          // Ties: smaller magnitude wins, then the earlier row-major candidate.
          if (first || sad < best_sad || (sad == best_sad && mag2 < best_mag2)) {
            best_sad = sad;
            best_dx = dx;
            best_dy = dy;
            best_mag2 = mag2;
            first = false;
          }
        }
      field.vectors.push_back({x, y, best_dx, best_dy});
      mag_sum += std::sqrt(static_cast<double>(best_mag2));
    }
  if (!field.vectors.empty())
    field.mean_magnitude = static_cast<float>(mag_sum / static_cast<double>(field.vectors.size()));
  return field;
}

double patch_entropy(const Tensor& patch) {
  if (patch.rank() != 3 || patch.dim(0) != 3)
    throw ShapeError("patch_entropy expects [3, h, w], got " + patch.dims_string());
  int h = patch.dim(1), w = patch.dim(2);
  std::array<int64_t, 256> hist{};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float g = gray_value(patch.at(0, y, x), patch.at(1, y, x), patch.at(2, y, x));
      int bin = static_cast<int>(std::lround(g * 255.f));
      hist[static_cast<size_t>(std::clamp(bin, 0, 255))]++;
    }
  double total = static_cast<double>(h) * w;
  double entropy = 0.0;
  for (int64_t count : hist) {
    if (count == 0) continue;
    double p = static_cast<double>(count) / total;
    entropy -= p * std::log2(p);
  }
  return entropy;
}

double histogram_distance(const Tensor& a, const Tensor& b) {
  require_same_dims(a, b, "histogram_distance");
  if (a.rank() != 3 || a.dim(0) != 3)
    throw ShapeError("histogram_distance expects [3, h, w], got " + a.dims_string());
  int pixels = a.dim(1) * a.dim(2);
  double dist = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::array<int, 32> ha{}, hb{};
    const float* pa = a.data() + static_cast<size_t>(c) * pixels;
    const float* pb = b.data() + static_cast<size_t>(c) * pixels;
    for (int i = 0; i < pixels; ++i) {
      ha[static_cast<size_t>(std::clamp(static_cast<int>(pa[i] * 32.f), 0, 31))]++;
      hb[static_cast<size_t>(std::clamp(static_cast<int>(pb[i] * 32.f), 0, 31))]++;
    }
    for (int bin = 0; bin < 32; ++bin)
      dist += std::fabs(static_cast<double>(ha[bin]) - static_cast<double>(hb[bin])) / pixels;
  }
  return dist;
}

bool shot_boundary(const Tensor& a, const Tensor& b, double threshold) {
  return histogram_distance(a, b) > threshold;
}

// ---------------------------------------------------------------------------
// Weighted sampling without replacement

namespace {

// Fenwick tree over per-candidate weights; select by prefix-sum inversion.
class WeightTree {
 public:
  explicit WeightTree(const std::vector<double>& weights)
      : n_(weights.size()), tree_(weights.size() + 1, 0.0) {
    for (size_t i = 0; i < n_; ++i) add(i, weights[i]);
  }

  void add(size_t i, double delta) {
    for (size_t j = i + 1; j <= n_; j += j & (~j + 1)) tree_[j] += delta;
  }

  double total() const {
    double sum = 0.0;
    for (size_t j = n_; j > 0; j -= j & (~j + 1)) sum += tree_[j];
    return sum;
  }

  // Largest index with prefix sum <= target, clamped into [0, n).
  size_t select(double target) const {
    size_t pos = 0;
    size_t mask = 1;
    while ((mask << 1) <= n_) mask <<= 1;
    for (; mask > 0; mask >>= 1) {
      size_t next = pos + mask;
      if (next <= n_ && tree_[next] < target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return std::min(pos, n_ - 1);
  }

 private:
  size_t n_;
  std::vector<double> tree_;
};

}  // namespace

std::vector<int> weighted_sample(const std::vector<float>& magnitudes, int n, uint64_t seed,
                                 float epsilon_weight) {
  if (n < 0 || n > static_cast<int>(magnitudes.size()))
    throw ArgumentError("weighted_sample: requested " + std::to_string(n) + " of " +
                        std::to_string(magnitudes.size()) + " candidates");
  std::vector<double> weights(magnitudes.size());
  for (size_t i = 0; i < magnitudes.size(); ++i) {
    if (magnitudes[i] < 0.f) throw ArgumentError("weighted_sample: negative magnitude");
    weights[i] = static_cast<double>(magnitudes[i]) + static_cast<double>(epsilon_weight);
  }
  WeightTree tree(weights);
  Rng rng(seed);
  std::vector<int> out;
  out.reserve(static_cast<size_t>(n));
  for (int draw = 0; draw < n; ++draw) {
    double total = tree.total();
    size_t idx = tree.select(rng.next_double() * total);
    // Guard against selecting an already-removed candidate through rounding.
    while (weights[idx] == 0.0 && idx > 0) --idx;
    while (weights[idx] == 0.0 && idx + 1 < weights.size()) ++idx;
    out.push_back(static_cast<int>(idx));
    tree.add(idx, -weights[idx]);
    weights[idx] = 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset pipeline

namespace {

Tensor tensor_window(const Tensor& src, int x0, int y0, int size) {
  Tensor out({3, size, size});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) out.at(c, y, x) = src.at(c, y0 + y, x0 + x);
  return out;
}

Frame tensor_to_frame(const Tensor& t) {
  Frame f(t.dim(2), t.dim(1));
  std::memcpy(f.data.data(), t.data(), t.size() * sizeof(float));
  return f;
}

Tensor flip_tensor(const Tensor& t, bool horizontal, bool vertical) {
  int h = t.dim(1), w = t.dim(2);
  Tensor out(t.dims());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.at(c, y, x) = t.at(c, vertical ? h - 1 - y : y, horizontal ? w - 1 - x : x);
  return out;
}

}  // namespace

std::vector<CandidatePatch> collect_candidates(const std::vector<TripleGroup>& triples,
                                               const DatasetParams& params,
                                               CandidateStats* stats) {
  if (params.candidates_per_group < 1)
    throw ArgumentError("collect_candidates: candidates_per_group must be >= 1");
  if (params.stored_patch < params.flow_block + 2 * params.flow_window)
    throw ConfigError("collect_candidates: stored patch too small for the flow search window");

  std::vector<CandidatePatch> candidates;
  Rng rng(params.seed);
  int s = params.stored_patch;
  CandidateStats local;
  local.groups = triples.size();

  for (const TripleGroup& triple : triples) {
    if (!triple.f1.same_size(triple.f2) || !triple.f2.same_size(triple.f3))
      throw ShapeError("collect_candidates: triple frames differ in size");
    if (triple.f1.width < s || triple.f1.height < s) {
      ++local.skipped_small;
      continue;
    }
    for (int cand = 0; cand < params.candidates_per_group; ++cand) {
      int tx = rng.uniform_int(0, triple.f1.width - s);
      int ty = rng.uniform_int(0, triple.f1.height - s);
      CandidatePatch c;
      c.p1 = frame_window(triple.f1, tx, ty, s);
      c.p2 = frame_window(triple.f2, tx, ty, s);
      c.p3 = frame_window(triple.f3, tx, ty, s);
      if (shot_boundary(c.p1, c.p2, params.shot_threshold) ||
          shot_boundary(c.p2, c.p3, params.shot_threshold)) {
        ++local.shot_rejected;
        continue;
      }
      FlowField flow = block_matching_flow(tensor_to_frame(c.p1), tensor_to_frame(c.p3),
                                           params.flow_grid_step, params.flow_window,
                                           params.flow_block);
      c.flow_magnitude = flow.mean_magnitude;
      c.entropy = static_cast<float>(patch_entropy(c.p2));
      candidates.push_back(std::move(c));
    }
  }
  if (stats) *stats = local;
  return candidates;
}

DatasetManifest build_dataset(const std::vector<TripleGroup>& triples,
                              const DatasetParams& params, const std::string& out_dir) {
  if (params.n_final > params.n_weighted)
    throw ArgumentError("build_dataset: n_final exceeds n_weighted");

  CandidateStats stats;
  std::vector<CandidatePatch> candidates = collect_candidates(triples, params, &stats);

  auto stage_counts = [&](const std::string& failed) {
    std::ostringstream os;
    os << "build_dataset: " << failed << " (groups " << stats.groups << ", skipped-small "
       << stats.skipped_small << ", shot-rejected " << stats.shot_rejected << ", candidates "
       << candidates.size() << ", n_weighted " << params.n_weighted << ", n_final "
       << params.n_final << ")";
    return os.str();
  };
  if (static_cast<int>(candidates.size()) < params.n_weighted)
    throw DatasetError(stage_counts("not enough candidates for the weighted stage"));

  std::vector<float> magnitudes(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) magnitudes[i] = candidates[i].flow_magnitude;
  Rng sample_rng(params.seed);
  std::vector<int> picked = weighted_sample(magnitudes, params.n_weighted,
                                            sample_rng.split().next_u64(), params.epsilon_weight);

  // Highest entropy first; ties keep the candidate order.
  std::stable_sort(picked.begin(), picked.end(), [&](int a, int b) {
    return candidates[static_cast<size_t>(a)].entropy > candidates[static_cast<size_t>(b)].entropy;
  });
  picked.resize(static_cast<size_t>(params.n_final));

  fs::create_directories(fs::path(out_dir) / "samples");
  DatasetManifest manifest;
  for (size_t i = 0; i < picked.size(); ++i) {
    const CandidatePatch& c = candidates[static_cast<size_t>(picked[i])];
    char name[64];
    std::snprintf(name, sizeof(name), "samples/sample_%05zu.ten", i);
    SampleRecord record{c.p1, c.p2, c.p3, c.flow_magnitude, c.entropy};
    save_sample(record, (fs::path(out_dir) / name).string());
    manifest.records.push_back({name, c.flow_magnitude, c.entropy});
  }
  save_manifest(manifest, (fs::path(out_dir) / "manifest.txt").string());
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write manifest: " + path);
  os << "ADMF 1 " << manifest.records.size() << "\n";
  char line[256];
  for (const ManifestRecord& r : manifest.records) {
    std::snprintf(line, sizeof(line), "%s %.9g %.9g\n", r.path.c_str(),
                  static_cast<double>(r.flow_magnitude), static_cast<double>(r.entropy));
    os << line;
  }
  if (!os) throw FormatError("manifest write failed: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(is, line)) throw ParseError("manifest is empty", 1);
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  long long count = -1;
  header >> magic >> version >> count;
  if (header.fail() || magic != "ADMF" || version != 1 || count < 0)
    throw ParseError("bad manifest header '" + line + "'", 1);

  DatasetManifest manifest;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream rec(line);
    ManifestRecord r;
    rec >> r.path >> r.flow_magnitude >> r.entropy;
    if (rec.fail()) throw ParseError("bad manifest record '" + line + "'", line_no);
    manifest.records.push_back(std::move(r));
  }
  if (static_cast<long long>(manifest.records.size()) != count)
    throw ParseError("manifest count " + std::to_string(count) + " does not match " +
                         std::to_string(manifest.records.size()) + " records",
                     1);
  return manifest;
}

void save_sample(const SampleRecord& record, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write sample: " + path);
  write_tensor_record(os, record.p1);
  write_tensor_record(os, record.p2);
  write_tensor_record(os, record.p3);
  if (!os) throw FormatError("sample write failed: " + path);
}

SampleRecord load_sample(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open sample: " + path);
  SampleRecord record;
  record.p1 = read_tensor_record(is);
  record.p2 = read_tensor_record(is);
  record.p3 = read_tensor_record(is);
  if (!record.p1.same_dims(record.p2) || !record.p2.same_dims(record.p3) ||
      record.p1.rank() != 3 || record.p1.dim(0) != 3)
    throw FormatError("sample patches malformed: " + path);
  return record;
}

std::vector<SampleRecord> load_dataset(const std::string& dir) {
  DatasetManifest manifest = load_manifest((fs::path(dir) / "manifest.txt").string());
  std::vector<SampleRecord> out;
  out.reserve(manifest.records.size());
  for (const ManifestRecord& r : manifest.records) {
    SampleRecord record = load_sample((fs::path(dir) / r.path).string());
    record.flow_magnitude = r.flow_magnitude;
    record.entropy = r.entropy;
    out.push_back(std::move(record));
  }
  return out;
}

std::vector<TripleGroup> load_triples_from_dir(const std::string& frames_dir) {
  if (!fs::is_directory(frames_dir))
    throw ArgumentError("not a directory: " + frames_dir);
  std::vector<std::string> clip_dirs;
  std::vector<std::string> direct_pngs;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    if (entry.is_directory())
      clip_dirs.push_back(entry.path().string());
    else if (entry.path().extension() == ".png")
      direct_pngs.push_back(entry.path().string());
  }
  if (clip_dirs.empty() && !direct_pngs.empty()) clip_dirs.push_back(frames_dir);
  std::sort(clip_dirs.begin(), clip_dirs.end());

  std::vector<TripleGroup> triples;
  for (const std::string& clip : clip_dirs) {
    std::vector<std::string> frames;
    for (const auto& entry : fs::directory_iterator(clip))
      if (entry.path().extension() == ".png") frames.push_back(entry.path().string());
    std::sort(frames.begin(), frames.end());
    for (size_t i = 0; i + 2 < frames.size() + 0u; i += 3) {
      TripleGroup t;
      t.f1 = load_png(frames[i]);
      t.f2 = load_png(frames[i + 1]);
      t.f3 = load_png(frames[i + 2]);
      t.source_id = fs::path(clip).filename().string();
      t.frame_index = static_cast<int>(i);
      triples.push_back(std::move(t));
    }
  }
  return triples;
}

// ---------------------------------------------------------------------------
// Augmentation

TrainingSample make_training_sample(const SampleRecord& record, const NetworkConfig& config,
                                    const AugmentOps& ops) {
  int s = record.p1.dim(1);
  int r = config.receptive_field;
  int k = config.patch_size;
  int window = r + 2;
  if (s < window)
    throw ShapeError("stored patch " + std::to_string(s) + " smaller than receptive window " +
                     std::to_string(window));
  if (ops.crop_x < 0 || ops.crop_y < 0 || ops.crop_x > s - window || ops.crop_y > s - window)
    throw ArgumentError("augment crop outside the stored patch");

  const Tensor& first = ops.swap_temporal ? record.p3 : record.p1;
  const Tensor& last = ops.swap_temporal ? record.p1 : record.p3;
  Tensor w1 = tensor_window(first, ops.crop_x, ops.crop_y, window);
  Tensor w2 = tensor_window(record.p2, ops.crop_x, ops.crop_y, window);
  Tensor w3 = tensor_window(last, ops.crop_x, ops.crop_y, window);
  if (ops.flip_h || ops.flip_v) {
    w1 = flip_tensor(w1, ops.flip_h, ops.flip_v);
    w2 = flip_tensor(w2, ops.flip_h, ops.flip_v);
    w3 = flip_tensor(w3, ops.flip_h, ops.flip_v);
  }

  TrainingSample sample;
  sample.r1 = tensor_window(w1, 1, 1, r);
  sample.r2 = tensor_window(w3, 1, 1, r);
  int apron_off = (r - k) / 2;
  sample.patches.p1 = tensor_window(w1, apron_off, apron_off, k + 2);
  sample.patches.p2 = tensor_window(w3, apron_off, apron_off, k + 2);

  int c = (r + 1) / 2;  // center of the (R+2) window
  for (int ch = 0; ch < 3; ++ch) sample.truth.color[ch] = w2.at(ch, c, c);
  for (int dir = 0; dir < 8; ++dir)
    for (int ch = 0; ch < 3; ++ch)
      sample.truth.gradients[dir][ch] =
          w2.at(ch, c + kNeighborDy[dir], c + kNeighborDx[dir]) - w2.at(ch, c, c);
  return sample;
}

TrainingSample augment_sample(const SampleRecord& record, const NetworkConfig& config, Rng& rng) {
  int s = record.p1.dim(1);
  int window = config.receptive_field + 2;
  if (s < window)
    throw ShapeError("stored patch " + std::to_string(s) + " smaller than receptive window " +
                     std::to_string(window));
  AugmentOps ops;
  ops.crop_x = rng.uniform_int(0, s - window);
  ops.crop_y = rng.uniform_int(0, s - window);
  ops.flip_h = rng.bernoulli(0.5);
  ops.flip_v = rng.bernoulli(0.5);
  ops.swap_temporal = rng.bernoulli(0.5);
  return make_training_sample(record, config, ops);
}

TrainingSample center_sample(const SampleRecord& record, const NetworkConfig& config) {
  int s = record.p1.dim(1);
  int window = config.receptive_field + 2;
  if (s < window)
    throw ShapeError("stored patch " + std::to_string(s) + " smaller than receptive window " +
                     std::to_string(window));
  AugmentOps ops;
  ops.crop_x = (s - window) / 2;
  ops.crop_y = (s - window) / 2;
  return make_training_sample(record, config, ops);
}

}  // namespace adaconv

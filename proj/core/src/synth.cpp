#include "adaconv/synth.hpp"

#include <cmath>

#include "adaconv/errors.hpp"

namespace adaconv {

namespace {

template <typename T>
void require_apron(const ApronPatchPairT<T>& patches) {
  if (patches.p1.rank() != 3 || patches.p1.dim(0) != 3 || patches.p1.dim(1) < 3 ||
      patches.p1.dim(1) != patches.p1.dim(2))
    throw ShapeError("apron patches must be [3, k+2, k+2], got " + patches.p1.dims_string());
  require_same_dims(patches.p1, patches.p2, "apron patches");
}

template <typename T>
T sign_of(T v) {
  if (v > T(0)) return T(1);
  if (v < T(0)) return T(-1);
  return T(0);
}

}  // namespace

template <typename T>
PatchPairT<T> center_patches(const ApronPatchPairT<T>& apron) {
  require_apron(apron);
  int k = apron.patch_size();
  PatchPairT<T> out{TensorT<T>({3, k, k}), TensorT<T>({3, k, k})};
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < k; ++y)
      for (int x = 0; x < k; ++x) {
        out.p1.at(c, y, x) = apron.p1.at(c, y + 1, x + 1);
        out.p2.at(c, y, x) = apron.p2.at(c, y + 1, x + 1);
      }
  return out;
}

template <typename T>
PatchPairT<T> gradient_patches(const ApronPatchPairT<T>& apron, int direction) {
  require_apron(apron);
  if (direction < 0 || direction >= 8)
    throw ArgumentError("gradient direction must lie in [0, 8)");
  int k = apron.patch_size();
  int dx = kNeighborDx[direction], dy = kNeighborDy[direction];
  PatchPairT<T> out{TensorT<T>({3, k, k}), TensorT<T>({3, k, k})};
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < k; ++y)
      for (int x = 0; x < k; ++x) {
        out.p1.at(c, y, x) =
            apron.p1.at(c, y + 1 + dy, x + 1 + dx) - apron.p1.at(c, y + 1, x + 1);
        out.p2.at(c, y, x) =
            apron.p2.at(c, y + 1 + dy, x + 1 + dx) - apron.p2.at(c, y + 1, x + 1);
      }
  return out;
}

template <typename T>
Color<T> synthesize_pixel(const PatchPairT<T>& patches, const KernelPairT<T>& kernel) {
  int k = kernel.k1.dim(0);
  if (patches.p1.rank() != 3 || patches.p1.dim(0) != 3 || patches.p1.dim(1) != k ||
      patches.p1.dim(2) != k)
    throw ShapeError("synthesize_pixel: patches " + patches.p1.dims_string() +
                     " vs kernel " + kernel.k1.dims_string());
  require_same_dims(patches.p1, patches.p2, "synthesize_pixel");
  Color<T> out{};
  size_t plane = static_cast<size_t>(k) * k;
  for (int c = 0; c < 3; ++c) {
    const T* a = patches.p1.data() + c * plane;
    const T* b = patches.p2.data() + c * plane;
    T acc = T(0);
    for (size_t i = 0; i < plane; ++i) acc += kernel.k1[i] * a[i] + kernel.k2[i] * b[i];
    out[c] = acc;
  }
  return out;
}

template <typename T>
T color_loss(const Color<T>& predicted, const Color<T>& truth) {
  T loss = T(0);
  for (int c = 0; c < 3; ++c) loss += std::abs(predicted[c] - truth[c]);
  return loss;
}

template <typename T>
T gradient_loss(const ApronPatchPairT<T>& patches, const KernelPairT<T>& kernel,
                const GroundTruthT<T>& truth) {
  T loss = T(0);
  for (int dir = 0; dir < 8; ++dir) {
    PatchPairT<T> grads = gradient_patches(patches, dir);
    Color<T> synthesized = synthesize_pixel(grads, kernel);
    for (int c = 0; c < 3; ++c) loss += std::abs(synthesized[c] - truth.gradients[dir][c]);
  }
  return loss;
}

template <typename T>
T total_loss(const ApronPatchPairT<T>& patches, const KernelPairT<T>& kernel,
             const GroundTruthT<T>& truth, T lambda) {
  Color<T> predicted = synthesize_pixel(center_patches(patches), kernel);
  T loss = color_loss(predicted, truth.color);
  if (lambda != T(0)) loss += lambda * gradient_loss(patches, kernel, truth);
  return loss;
}

template <typename T>
TensorT<T> loss_gradient_wrt_kernel(const ApronPatchPairT<T>& patches,
                                    const KernelPairT<T>& kernel, const GroundTruthT<T>& truth,
                                    T lambda) {
  int k = kernel.k1.dim(0);
  KernelPairT<T> grad{TensorT<T>({k, k}), TensorT<T>({k, k})};
  size_t plane = static_cast<size_t>(k) * k;

  auto accumulate = [&](const PatchPairT<T>& p, const Color<T>& target, T weight) {
    Color<T> synthesized = synthesize_pixel(p, kernel);
    for (int c = 0; c < 3; ++c) {
      T s = weight * sign_of(synthesized[c] - target[c]);
      if (s == T(0)) continue;
      const T* a = p.p1.data() + c * plane;
      const T* b = p.p2.data() + c * plane;
      for (size_t i = 0; i < plane; ++i) {
        grad.k1[i] += s * a[i];
        grad.k2[i] += s * b[i];
      }
    }
  };

  accumulate(center_patches(patches), truth.color, T(1));
  if (lambda != T(0))
    for (int dir = 0; dir < 8; ++dir)
      accumulate(gradient_patches(patches, dir), truth.gradients[dir], lambda);
  return merge_kernel(grad);
}

template <typename T>
std::pair<std::optional<CentroidT<T>>, std::optional<CentroidT<T>>> kernel_centroids(
    const KernelPairT<T>& kernel, T min_mass) {
  int k = kernel.k1.dim(0);
  T center = static_cast<T>((k - 1) / 2);
  auto centroid = [&](const TensorT<T>& sub) -> std::optional<CentroidT<T>> {
    T mass = T(0), mx = T(0), my = T(0);
    for (int y = 0; y < k; ++y)
      for (int x = 0; x < k; ++x) {
        T v = sub[static_cast<size_t>(y) * k + x];
        mass += v;
        mx += v * static_cast<T>(x);
        my += v * static_cast<T>(y);
      }
    if (mass < min_mass) return std::nullopt;
    return CentroidT<T>{mx / mass - center, my / mass - center};
  };
  return {centroid(kernel.k1), centroid(kernel.k2)};
}

template <typename T>
std::pair<T, T> sub_kernel_mass(const KernelPairT<T>& kernel) {
  T m1 = T(0), m2 = T(0);
  for (size_t i = 0; i < kernel.k1.size(); ++i) m1 += kernel.k1[i];
  for (size_t i = 0; i < kernel.k2.size(); ++i) m2 += kernel.k2[i];
  return {m1, m2};
}

#define ADACONV_INSTANTIATE_SYNTH(T)                                                           \
  template PatchPairT<T> center_patches<T>(const ApronPatchPairT<T>&);                         \
  template PatchPairT<T> gradient_patches<T>(const ApronPatchPairT<T>&, int);                  \
  template Color<T> synthesize_pixel<T>(const PatchPairT<T>&, const KernelPairT<T>&);          \
  template T color_loss<T>(const Color<T>&, const Color<T>&);                                  \
  template T gradient_loss<T>(const ApronPatchPairT<T>&, const KernelPairT<T>&,                \
                              const GroundTruthT<T>&);                                         \
  template T total_loss<T>(const ApronPatchPairT<T>&, const KernelPairT<T>&,                   \
                           const GroundTruthT<T>&, T);                                         \
  template TensorT<T> loss_gradient_wrt_kernel<T>(const ApronPatchPairT<T>&,                   \
                                                  const KernelPairT<T>&,                       \
                                                  const GroundTruthT<T>&, T);                  \
  template std::pair<std::optional<CentroidT<T>>, std::optional<CentroidT<T>>>                 \
  kernel_centroids<T>(const KernelPairT<T>&, T);                                               \
  template std::pair<T, T> sub_kernel_mass<T>(const KernelPairT<T>&);

ADACONV_INSTANTIATE_SYNTH(float)
ADACONV_INSTANTIATE_SYNTH(double)

}  // namespace adaconv

#pragma once

#include <array>
#include <optional>
#include <utility>

#include "adaconv/net.hpp"
#include "adaconv/tensor.hpp"

namespace adaconv {

template <typename T>
using Color = std::array<T, 3>;

using Rgb = Color<float>;

// The eight neighbor directions, row-major over (dy, dx) excluding (0, 0).
// Gradients are forward differences from the center toward each neighbor.
inline constexpr int kNeighborDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
inline constexpr int kNeighborDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};

// Co-centered k x k x 3 patches from the two input frames, stored [3, k, k].
template <typename T>
struct PatchPairT {
  TensorT<T> p1, p2;
  int patch_size() const { return p1.dim(1); }
};

using PatchPair = PatchPairT<float>;

// Patches carrying a one-pixel apron, stored [3, k+2, k+2]. The apron exists
// so the eight finite-difference gradients of the k x k core are well defined.
template <typename T>
struct ApronPatchPairT {
  TensorT<T> p1, p2;
  int patch_size() const { return p1.dim(1) - 2; }
};

using ApronPatchPair = ApronPatchPairT<float>;

template <typename T>
PatchPairT<T> center_patches(const ApronPatchPairT<T>& apron);

// Forward differences toward neighbor `direction`, cropped to the k x k core.
template <typename T>
PatchPairT<T> gradient_patches(const ApronPatchPairT<T>& apron, int direction);

template <typename T>
struct GroundTruthT {
  Color<T> color;
  std::array<Color<T>, 8> gradients;
};

using GroundTruth = GroundTruthT<float>;

// Output color per channel: sum(k1 * p1_c) + sum(k2 * p2_c). A convex
// combination of patch values, so the result stays inside their range.
template <typename T>
Color<T> synthesize_pixel(const PatchPairT<T>& patches, const KernelPairT<T>& kernel);

// l1 distance over the three channels.
template <typename T>
T color_loss(const Color<T>& predicted, const Color<T>& truth);

// Sum over the eight directions of the l1 distance between the kernel applied
// to gradient patches and the ground-truth gradient.
template <typename T>
T gradient_loss(const ApronPatchPairT<T>& patches, const KernelPairT<T>& kernel,
                const GroundTruthT<T>& truth);

template <typename T>
T total_loss(const ApronPatchPairT<T>& patches, const KernelPairT<T>& kernel,
             const GroundTruthT<T>& truth, T lambda);

// Analytic d(total_loss)/d(kernel), flattened to the network's kernel layout
// (row-major k x 2k, columns [k1 | k2]). The l1 subgradient at 0 is 0.
template <typename T>
TensorT<T> loss_gradient_wrt_kernel(const ApronPatchPairT<T>& patches,
                                    const KernelPairT<T>& kernel, const GroundTruthT<T>& truth,
                                    T lambda);

template <typename T>
struct CentroidT {
  T dx, dy;  // offset from the patch center, x right, y down
};

using Centroid = CentroidT<float>;

// Mass-weighted centroid of each sub-kernel in center-relative coordinates;
// empty when the sub-kernel carries less than min_mass.
template <typename T>
std::pair<std::optional<CentroidT<T>>, std::optional<CentroidT<T>>> kernel_centroids(
    const KernelPairT<T>& kernel, T min_mass = T(1e-3));

template <typename T>
std::pair<T, T> sub_kernel_mass(const KernelPairT<T>& kernel);

}  // namespace adaconv

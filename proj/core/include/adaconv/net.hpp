#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaconv/layers.hpp"
#include "adaconv/tensor.hpp"

namespace adaconv {

// Architecture parameters. The layer chain generated from a config is
//   [conv(sizes[i]) -> widths[i], BN, ReLU; down-conv 2x2/2, ReLU] * down_convs
//   [conv(sizes[i]) -> widths[i], BN, ReLU]  for the remaining middle convs
//   conv(sizes[n-1]) -> widths[n-1], ReLU    (collapses the spatial extent to 1x1)
//   conv(1x1) -> patch_size * 2 * patch_size (kernel logits)
//   spatial softmax
// Down-convolutions keep their channel count and carry no batch norm.
struct NetworkConfig {
  int receptive_field = 23;  // R, odd
  int patch_size = 11;       // k, odd
  int down_convs = 1;        // d
  std::vector<int> conv_widths = {32, 64, 768};
  std::vector<int> conv_sizes = {7, 5, 4, 1};

  int kernel_len() const { return patch_size * 2 * patch_size; }
  int pad() const { return (receptive_field - 1) / 2; }
  int shift_factor() const { return 1 << down_convs; }

  static NetworkConfig desk();
  static NetworkConfig paper_scale();

  bool operator==(const NetworkConfig&) const = default;
};

struct LayerShape {
  std::string label;
  int channels, height, width;
};

// Runs the chain symbolically from a receptive-field-sized input; throws
// ConfigError naming the first inconsistent layer.
std::vector<LayerShape> compute_shape_chain(const NetworkConfig& config);

void validate_config(const NetworkConfig& config);

enum class LayerKind { kConv, kDownConv, kBatchNorm, kRelu, kSoftmax };

template <typename T>
struct NetLayer {
  LayerKind kind;
  ConvParams<T> conv;      // kConv / kDownConv
  BatchNormParams<T> bn;   // kBatchNorm
};

template <typename T>
struct KernelNetT {
  NetworkConfig config;
  std::vector<NetLayer<T>> layers;

  // Trainable parameters in a fixed order: per conv layer weights then bias,
  // per batch-norm layer gamma then beta.
  std::vector<TensorT<T>*> parameters();
  std::vector<const TensorT<T>*> parameters() const;
  // Parameters plus batch-norm running statistics; checkpoint order.
  std::vector<TensorT<T>*> state_tensors();
  std::vector<const TensorT<T>*> state_tensors() const;

  template <typename U>
  KernelNetT<U> cast() const {
    KernelNetT<U> out;
    out.config = config;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) {
      NetLayer<U> nl;
      nl.kind = l.kind;
      if (l.kind == LayerKind::kConv || l.kind == LayerKind::kDownConv) {
        nl.conv.weights = l.conv.weights.template cast<U>();
        nl.conv.bias = l.conv.bias.template cast<U>();
        nl.conv.stride_h = l.conv.stride_h;
        nl.conv.stride_w = l.conv.stride_w;
      } else if (l.kind == LayerKind::kBatchNorm) {
        nl.bn.gamma = l.bn.gamma.template cast<U>();
        nl.bn.beta = l.bn.beta.template cast<U>();
        nl.bn.running_mean = l.bn.running_mean.template cast<U>();
        nl.bn.running_var = l.bn.running_var.template cast<U>();
        nl.bn.momentum = static_cast<U>(l.bn.momentum);
        nl.bn.epsilon = static_cast<U>(l.bn.epsilon);
      }
      out.layers.push_back(std::move(nl));
    }
    return out;
  }
};

using KernelNet = KernelNetT<float>;

// Xavier-uniform conv weights, zero biases, identity batch norm. Deterministic
// for a given seed.
template <typename T>
KernelNetT<T> init_network(const NetworkConfig& config, uint64_t seed);

template <typename T>
struct ForwardCache {
  bool valid = false;
  std::vector<TensorT<T>> acts;               // acts[0] = input, acts[i+1] = layer i output
  std::vector<BatchNormCache<T>> bn_caches;   // parallel to layers
};

// Batch forward. Input [n, 6, h, w]; returns the post-softmax kernel field
// [n, kernel_len, oh, ow]. Train phase uses batch statistics (and updates the
// running averages unless update_running is false); infer phase is const.
template <typename T>
TensorT<T> net_forward(KernelNetT<T>& net, const TensorT<T>& input, Phase phase,
                       ForwardCache<T>* cache = nullptr, bool update_running = true,
                       int threads = 1);

template <typename T>
TensorT<T> net_infer(const KernelNetT<T>& net, const TensorT<T>& input, int threads = 1);

template <typename T>
struct NetGradients {
  std::vector<TensorT<T>> params;  // parallel to KernelNetT::parameters()
  TensorT<T> d_input;
};

// Backpropagates a post-softmax kernel gradient [n, kernel_len, oh, ow]
// through the cached forward pass. Throws StateError without a valid cache.
template <typename T>
NetGradients<T> net_backward(const KernelNetT<T>& net, const ForwardCache<T>& cache,
                             const TensorT<T>& d_kernel, int threads = 1);

// Estimated kernel split into the two sub-kernels applied to the patches of
// the first and second input frame. Each is [k, k]; coefficients are
// non-negative and jointly sum to 1 (softmax output).
template <typename T>
struct KernelPairT {
  TensorT<T> k1, k2;
};

using KernelPair = KernelPairT<float>;

// The flat kernel vector of length k*2k is read as a row-major k x 2k grid and
// split column-wise: left k columns -> k1, right k columns -> k2.
template <typename T>
KernelPairT<T> split_kernel(const T* flat, int patch_size);

template <typename T>
KernelPairT<T> split_kernel(const TensorT<T>& flat, int patch_size);

// Inverse layout transform for gradients flowing back into the network.
template <typename T>
TensorT<T> merge_kernel(const KernelPairT<T>& pair);

// Single-sample convenience: receptive patches [3, R, R] each are concatenated
// channel-wise and pushed through the network.
template <typename T>
KernelPairT<T> forward_kernel(KernelNetT<T>& net, const TensorT<T>& r1, const TensorT<T>& r2,
                              Phase phase = Phase::kInfer);

// Little-endian checkpoint: magic "ADKN", u32 version, config as u32 fields,
// then every state tensor as (u32 rank, u32 dims..., float32 data).
void save_checkpoint(const KernelNetT<float>& net, const std::string& path);
KernelNetT<float> load_checkpoint(const std::string& path);

}  // namespace adaconv

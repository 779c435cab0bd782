#pragma once

#include <vector>

#include "adaconv/tensor.hpp"

namespace adaconv {

enum class Phase { kTrain, kInfer };

template <typename T>
struct ConvParams {
  TensorT<T> weights;  // [out_ch, in_ch, kh, kw]
  TensorT<T> bias;     // [out_ch]
  int stride_h = 1;
  int stride_w = 1;

  int out_channels() const { return weights.dim(0); }
  int in_channels() const { return weights.dim(1); }
  int kernel_h() const { return weights.dim(2); }
  int kernel_w() const { return weights.dim(3); }
};

// Valid cross-correlation (no padding, no kernel flip). Input is
// [n, c, h, w] or [c, h, w]; the output keeps the input's rank.
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const ConvParams<T>& params, int threads = 1);

template <typename T>
struct ConvBackward {
  TensorT<T> d_input;
  TensorT<T> d_weights;
  TensorT<T> d_bias;
};

template <typename T>
ConvBackward<T> conv2d_backward(const TensorT<T>& input, const ConvParams<T>& params,
                                const TensorT<T>& d_output, int threads = 1);

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& input);

// Subgradient at 0 is 0: upstream passes only where input > 0.
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& input, const TensorT<T>& d_output);

template <typename T>
struct BatchNormParams {
  TensorT<T> gamma;         // [c]
  TensorT<T> beta;          // [c]
  TensorT<T> running_mean;  // [c]
  TensorT<T> running_var;   // [c]
  T momentum = T(0.99);
  T epsilon = T(1e-5);

  static BatchNormParams init(int channels) {
    BatchNormParams p;
    p.gamma = TensorT<T>::full({channels}, T(1));
    p.beta = TensorT<T>({channels});
    p.running_mean = TensorT<T>({channels});
    p.running_var = TensorT<T>::full({channels}, T(1));
    return p;
  }
};

template <typename T>
struct BatchNormCache {
  std::vector<T> mean;     // per channel batch mean
  std::vector<T> inv_std;  // 1 / sqrt(var + eps)
  TensorT<T> x_hat;        // normalized activations before scale/shift
};

// Train phase normalizes with batch statistics (batch >= 2 required) and, when
// update_running is set, folds them into the running averages. Infer phase
// normalizes with the running statistics. Input [n, c, h, w]; statistics are
// accumulated in index order so results do not depend on threading.
template <typename T>
TensorT<T> batch_norm_forward(const TensorT<T>& input, BatchNormParams<T>& params, Phase phase,
                              BatchNormCache<T>* cache = nullptr, bool update_running = true);

template <typename T>
struct BatchNormBackward {
  TensorT<T> d_input;
  TensorT<T> d_gamma;
  TensorT<T> d_beta;
};

template <typename T>
BatchNormBackward<T> batch_norm_backward(const TensorT<T>& input, const BatchNormParams<T>& params,
                                         const BatchNormCache<T>& cache, const TensorT<T>& d_output);

// Softmax across the channel dimension, independently at every spatial
// location (and for every batch element). Accepts rank 1, 3 or 4; rank 1 is a
// plain logit vector. Max subtraction guards against overflow for any finite
// input.
template <typename T>
TensorT<T> spatial_softmax_forward(const TensorT<T>& logits);

// Exact Jacobian-vector product: dx = y * (dy - sum(dy * y)) per location.
template <typename T>
TensorT<T> spatial_softmax_backward(const TensorT<T>& output, const TensorT<T>& d_output);

}  // namespace adaconv

#include "adaconv/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "adaconv/parallel.hpp"

namespace adaconv {

namespace {

// C[m, n] += A[m, k] * B[k, n]. The k loop is innermost in memory but the
// accumulation order per output element is fixed (ascending k), which keeps
// results identical no matter how callers batch or tile their inputs.
template <typename T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<size_t>(i) * k;
    T* crow = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      T av = arow[p];
      const T* brow = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m, n] += A[m, k] * B[n, k]^T  (dot products along k).
template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<size_t>(i) * k;
    T* crow = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<size_t>(j) * k;
      T acc = T(0);
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C[m, n] += A[k, m]^T * B[k, n].
template <typename T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int p = 0; p < k; ++p) {
    const T* arow = a + static_cast<size_t>(p) * m;
    const T* brow = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      T av = arow[i];
      T* crow = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void im2col(const T* im, int channels, int h, int w, int kh, int kw, int sh, int sw, int oh,
            int ow, T* col) {
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        T* dst = col;
        col += static_cast<size_t>(oh) * ow;
        const T* src = im + (static_cast<size_t>(c) * h + ky) * w + kx;
        for (int oy = 0; oy < oh; ++oy) {
          const T* row = src + static_cast<size_t>(oy) * sh * w;
          for (int ox = 0; ox < ow; ++ox) dst[ox] = row[static_cast<size_t>(ox) * sw];
          dst += ow;
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int channels, int h, int w, int kh, int kw, int sh, int sw, int oh,
                int ow, T* im) {
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const T* src = col;
        col += static_cast<size_t>(oh) * ow;
        T* dst = im + (static_cast<size_t>(c) * h + ky) * w + kx;
        for (int oy = 0; oy < oh; ++oy) {
          T* row = dst + static_cast<size_t>(oy) * sh * w;
          for (int ox = 0; ox < ow; ++ox) row[static_cast<size_t>(ox) * sw] += src[ox];
          src += ow;
        }
      }
    }
  }
}

struct ConvGeometry {
  int batch, in_ch, h, w, out_ch, kh, kw, sh, sw, oh, ow;
  bool batched;
};

template <typename T>
ConvGeometry conv_geometry(const TensorT<T>& input, const ConvParams<T>& params) {
  if (input.rank() != 3 && input.rank() != 4)
    throw ShapeError("conv2d expects rank 3 or 4 input, got " + input.dims_string());
  ConvGeometry g;
  g.batched = input.rank() == 4;
  g.batch = g.batched ? input.dim(0) : 1;
  g.in_ch = input.dim(g.batched ? 1 : 0);
  g.h = input.dim(g.batched ? 2 : 1);
  g.w = input.dim(g.batched ? 3 : 2);
  g.out_ch = params.out_channels();
  g.kh = params.kernel_h();
  g.kw = params.kernel_w();
  g.sh = params.stride_h;
  g.sw = params.stride_w;
  if (g.in_ch != params.in_channels())
    throw ShapeError("conv2d: input " + input.dims_string() + " incompatible with weights " +
                     params.weights.dims_string());
  g.oh = g.kh <= g.h ? (g.h - g.kh) / g.sh + 1 : 0;
  g.ow = g.kw <= g.w ? (g.w - g.kw) / g.sw + 1 : 0;
  if (g.oh < 1 || g.ow < 1)
    throw ConfigError("conv2d: zero-size output for input " + input.dims_string() +
                      " with kernel " + params.weights.dims_string());
  return g;
}

}  // namespace

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const ConvParams<T>& params, int threads) {
  ConvGeometry g = conv_geometry(input, params);
  TensorT<T> output(g.batched ? std::vector<int>{g.batch, g.out_ch, g.oh, g.ow}
                              : std::vector<int>{g.out_ch, g.oh, g.ow});
  size_t in_stride = static_cast<size_t>(g.in_ch) * g.h * g.w;
  size_t out_stride = static_cast<size_t>(g.out_ch) * g.oh * g.ow;
  int patch = g.in_ch * g.kh * g.kw;
  int cells = g.oh * g.ow;

  parallel_for(g.batch, threads, [&](int n) {
    std::vector<T> col(static_cast<size_t>(patch) * cells);
    im2col(input.data() + n * in_stride, g.in_ch, g.h, g.w, g.kh, g.kw, g.sh, g.sw, g.oh, g.ow,
           col.data());
    T* out = output.data() + n * out_stride;
    for (int oc = 0; oc < g.out_ch; ++oc) {
      T b = params.bias[static_cast<size_t>(oc)];
      T* dst = out + static_cast<size_t>(oc) * cells;
      for (int i = 0; i < cells; ++i) dst[i] = b;
    }
    gemm_nn(g.out_ch, cells, patch, params.weights.data(), col.data(), out);
  });
  return output;
}

template <typename T>
ConvBackward<T> conv2d_backward(const TensorT<T>& input, const ConvParams<T>& params,
                                const TensorT<T>& d_output, int threads) {
  ConvGeometry g = conv_geometry(input, params);
  std::vector<int> want = g.batched ? std::vector<int>{g.batch, g.out_ch, g.oh, g.ow}
                                    : std::vector<int>{g.out_ch, g.oh, g.ow};
  if (d_output.dims() != want)
    throw ShapeError("conv2d backward: upstream " + d_output.dims_string() + " vs expected " +
                     TensorT<T>::dims_string(want));

  ConvBackward<T> out;
  out.d_input = TensorT<T>(input.dims());
  out.d_weights = TensorT<T>(params.weights.dims());
  out.d_bias = TensorT<T>(params.bias.dims());

  size_t in_stride = static_cast<size_t>(g.in_ch) * g.h * g.w;
  size_t out_stride = static_cast<size_t>(g.out_ch) * g.oh * g.ow;
  int patch = g.in_ch * g.kh * g.kw;
  int cells = g.oh * g.ow;

  // Per-sample columns are shared between the d_input pass (parallel over the
  // batch) and the d_weights pass (parallel over output channels, batch-major
  // accumulation). Both reductions run in a fixed order, so gradients are
  // bit-identical for any thread count.
  std::vector<std::vector<T>> cols(static_cast<size_t>(g.batch));
  parallel_for(g.batch, threads, [&](int n) {
    cols[n].resize(static_cast<size_t>(patch) * cells);
    im2col(input.data() + n * in_stride, g.in_ch, g.h, g.w, g.kh, g.kw, g.sh, g.sw, g.oh, g.ow,
           cols[n].data());
    std::vector<T> d_col(static_cast<size_t>(patch) * cells, T(0));
    gemm_tn(patch, cells, g.out_ch, params.weights.data(), d_output.data() + n * out_stride,
            d_col.data());
    col2im_add(d_col.data(), g.in_ch, g.h, g.w, g.kh, g.kw, g.sh, g.sw, g.oh, g.ow,
               out.d_input.data() + n * in_stride);
  });

  parallel_for(g.out_ch, threads, [&](int oc) {
    T* dw = out.d_weights.data() + static_cast<size_t>(oc) * patch;
    T db = T(0);
    for (int n = 0; n < g.batch; ++n) {
      const T* dy = d_output.data() + n * out_stride + static_cast<size_t>(oc) * cells;
      gemm_nt(1, patch, cells, dy, cols[n].data(), dw);
      for (int i = 0; i < cells; ++i) db += dy[i];
    }
    out.d_bias[static_cast<size_t>(oc)] = db;
  });
  return out;
}

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& input) {
  TensorT<T> out(input.dims());
  const T* x = input.data();
  T* y = out.data();
  for (size_t i = 0; i < input.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& input, const TensorT<T>& d_output) {
  require_same_dims(input, d_output, "relu backward");
  TensorT<T> out(input.dims());
  const T* x = input.data();
  const T* dy = d_output.data();
  T* dx = out.data();
  for (size_t i = 0; i < input.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
  return out;
}

template <typename T>
TensorT<T> batch_norm_forward(const TensorT<T>& input, BatchNormParams<T>& params, Phase phase,
                              BatchNormCache<T>* cache, bool update_running) {
  if (input.rank() != 4 && input.rank() != 3)
    throw ShapeError("batch_norm expects rank 3 or 4 input, got " + input.dims_string());
  bool batched = input.rank() == 4;
  int n = batched ? input.dim(0) : 1;
  int c = input.dim(batched ? 1 : 0);
  int spatial = input.dim(batched ? 2 : 1) * input.dim(batched ? 3 : 2);
  if (c != params.gamma.dim(0))
    throw ShapeError("batch_norm: channel count " + std::to_string(c) + " vs params " +
                     params.gamma.dims_string());
  if (phase == Phase::kTrain && n < 2)
    throw ConfigError("batch_norm: train phase requires batch size >= 2, got " +
                      std::to_string(n));

  TensorT<T> out(input.dims());
  std::vector<T> mean(static_cast<size_t>(c)), inv_std(static_cast<size_t>(c));
  size_t ch_stride = static_cast<size_t>(spatial);
  size_t n_stride = static_cast<size_t>(c) * spatial;
  T count = static_cast<T>(n) * static_cast<T>(spatial);

  if (phase == Phase::kTrain) {
    for (int ch = 0; ch < c; ++ch) {
      // double accumulation keeps constant channels at exactly zero variance
      double sum = 0.0;
      for (int b = 0; b < n; ++b) {
        const T* x = input.data() + b * n_stride + ch * ch_stride;
        for (int i = 0; i < spatial; ++i) sum += static_cast<double>(x[i]);
      }
      T mu = static_cast<T>(sum / static_cast<double>(count));
      double var_sum = 0.0;
      for (int b = 0; b < n; ++b) {
        const T* x = input.data() + b * n_stride + ch * ch_stride;
        for (int i = 0; i < spatial; ++i) {
          double d = static_cast<double>(x[i] - mu);
          var_sum += d * d;
        }
      }
      T var = static_cast<T>(var_sum / static_cast<double>(count));
      mean[ch] = mu;
      inv_std[ch] = T(1) / std::sqrt(var + params.epsilon);
      if (update_running) {
        params.running_mean[ch] = params.momentum * params.running_mean[ch] +
                                  (T(1) - params.momentum) * mu;
        params.running_var[ch] =
            params.momentum * params.running_var[ch] + (T(1) - params.momentum) * var;
      }
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean[ch] = params.running_mean[ch];
      inv_std[ch] = T(1) / std::sqrt(params.running_var[ch] + params.epsilon);
    }
  }

  TensorT<T>* x_hat_out = nullptr;
  if (cache) {
    cache->mean = mean;
    cache->inv_std = inv_std;
    cache->x_hat = TensorT<T>(input.dims());
    x_hat_out = &cache->x_hat;
  }
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const T* x = input.data() + b * n_stride + ch * ch_stride;
      T* y = out.data() + b * n_stride + ch * ch_stride;
      T* xh = x_hat_out ? x_hat_out->data() + b * n_stride + ch * ch_stride : nullptr;
      T mu = mean[ch], is = inv_std[ch], ga = params.gamma[ch], be = params.beta[ch];
      for (int i = 0; i < spatial; ++i) {
        T norm = (x[i] - mu) * is;
        if (xh) xh[i] = norm;
        y[i] = ga * norm + be;
      }
    }
  }
  return out;
}

template <typename T>
BatchNormBackward<T> batch_norm_backward(const TensorT<T>& input, const BatchNormParams<T>& params,
                                         const BatchNormCache<T>& cache,
                                         const TensorT<T>& d_output) {
  require_same_dims(input, d_output, "batch_norm backward");
  bool batched = input.rank() == 4;
  int n = batched ? input.dim(0) : 1;
  int c = input.dim(batched ? 1 : 0);
  int spatial = input.dim(batched ? 2 : 1) * input.dim(batched ? 3 : 2);
  size_t ch_stride = static_cast<size_t>(spatial);
  size_t n_stride = static_cast<size_t>(c) * spatial;
  T count = static_cast<T>(n) * static_cast<T>(spatial);

  BatchNormBackward<T> out;
  out.d_input = TensorT<T>(input.dims());
  out.d_gamma = TensorT<T>({c});
  out.d_beta = TensorT<T>({c});

  // Standard train-phase backward through the batch statistics:
  //   dx = (gamma * inv_std / m) * (m * dy - sum(dy) - x_hat * sum(dy * x_hat))
  for (int ch = 0; ch < c; ++ch) {
    T sum_dy = T(0), sum_dy_xhat = T(0);
    for (int b = 0; b < n; ++b) {
      const T* dy = d_output.data() + b * n_stride + ch * ch_stride;
      const T* xh = cache.x_hat.data() + b * n_stride + ch * ch_stride;
      for (int i = 0; i < spatial; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * xh[i];
      }
    }
    out.d_gamma[ch] = sum_dy_xhat;
    out.d_beta[ch] = sum_dy;
    T scale = params.gamma[ch] * cache.inv_std[ch] / count;
    for (int b = 0; b < n; ++b) {
      const T* dy = d_output.data() + b * n_stride + ch * ch_stride;
      const T* xh = cache.x_hat.data() + b * n_stride + ch * ch_stride;
      T* dx = out.d_input.data() + b * n_stride + ch * ch_stride;
      for (int i = 0; i < spatial; ++i)
        dx[i] = scale * (count * dy[i] - sum_dy - xh[i] * sum_dy_xhat);
    }
  }
  return out;
}

namespace {

struct SoftmaxGeometry {
  int batch, channels, spatial;
};

template <typename T>
SoftmaxGeometry softmax_geometry(const TensorT<T>& t) {
  switch (t.rank()) {
    case 1:
      return {1, t.dim(0), 1};
    case 3:
      return {1, t.dim(0), t.dim(1) * t.dim(2)};
    case 4:
      return {t.dim(0), t.dim(1), t.dim(2) * t.dim(3)};
    default:
      throw ShapeError("spatial_softmax expects rank 1, 3 or 4, got " + t.dims_string());
  }
}

}  // namespace

template <typename T>
TensorT<T> spatial_softmax_forward(const TensorT<T>& logits) {
  SoftmaxGeometry g = softmax_geometry(logits);
  TensorT<T> out(logits.dims());
  size_t n_stride = static_cast<size_t>(g.channels) * g.spatial;
  for (int n = 0; n < g.batch; ++n) {
    const T* x = logits.data() + n * n_stride;
    T* y = out.data() + n * n_stride;
    for (int s = 0; s < g.spatial; ++s) {
      T max = x[s];
      for (int c = 1; c < g.channels; ++c)
        max = std::max(max, x[static_cast<size_t>(c) * g.spatial + s]);
      T sum = T(0);
      for (int c = 0; c < g.channels; ++c) {
        size_t idx = static_cast<size_t>(c) * g.spatial + s;
        T e = std::exp(x[idx] - max);
        y[idx] = e;
        sum += e;
      }
      T inv = T(1) / sum;
      for (int c = 0; c < g.channels; ++c) y[static_cast<size_t>(c) * g.spatial + s] *= inv;
    }
  }
  return out;
}

template <typename T>
TensorT<T> spatial_softmax_backward(const TensorT<T>& output, const TensorT<T>& d_output) {
  require_same_dims(output, d_output, "spatial_softmax backward");
  SoftmaxGeometry g = softmax_geometry(output);
  TensorT<T> out(output.dims());
  size_t n_stride = static_cast<size_t>(g.channels) * g.spatial;
  for (int n = 0; n < g.batch; ++n) {
    const T* y = output.data() + n * n_stride;
    const T* dy = d_output.data() + n * n_stride;
    T* dx = out.data() + n * n_stride;
    for (int s = 0; s < g.spatial; ++s) {
      T dot = T(0);
      for (int c = 0; c < g.channels; ++c) {
        size_t idx = static_cast<size_t>(c) * g.spatial + s;
        dot += dy[idx] * y[idx];
      }
      for (int c = 0; c < g.channels; ++c) {
        size_t idx = static_cast<size_t>(c) * g.spatial + s;
        dx[idx] = y[idx] * (dy[idx] - dot);
      }
    }
  }
  return out;
}

#define ADACONV_INSTANTIATE_LAYERS(T)                                                          \
  template TensorT<T> conv2d_forward<T>(const TensorT<T>&, const ConvParams<T>&, int);        \
  template ConvBackward<T> conv2d_backward<T>(const TensorT<T>&, const ConvParams<T>&,        \
                                              const TensorT<T>&, int);                        \
  template TensorT<T> relu_forward<T>(const TensorT<T>&);                                     \
  template TensorT<T> relu_backward<T>(const TensorT<T>&, const TensorT<T>&);                 \
  template TensorT<T> batch_norm_forward<T>(const TensorT<T>&, BatchNormParams<T>&, Phase,    \
                                            BatchNormCache<T>*, bool);                        \
  template BatchNormBackward<T> batch_norm_backward<T>(                                       \
      const TensorT<T>&, const BatchNormParams<T>&, const BatchNormCache<T>&,                 \
      const TensorT<T>&);                                                                     \
  template TensorT<T> spatial_softmax_forward<T>(const TensorT<T>&);                          \
  template TensorT<T> spatial_softmax_backward<T>(const TensorT<T>&, const TensorT<T>&);

ADACONV_INSTANTIATE_LAYERS(float)
ADACONV_INSTANTIATE_LAYERS(double)

}  // namespace adaconv

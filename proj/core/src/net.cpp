#include "adaconv/net.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "adaconv/errors.hpp"
#include "adaconv/rng.hpp"
#include "adaconv/tensor_io.hpp"

namespace adaconv {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

NetworkConfig NetworkConfig::desk() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::paper_scale() {
  NetworkConfig c;
  c.receptive_field = 79;
  c.patch_size = 41;
  c.down_convs = 3;
  c.conv_widths = {32, 64, 128, 256, 2048};
  c.conv_sizes = {7, 5, 5, 3, 4, 1};
  return c;
}

namespace {

struct ChainStep {
  LayerKind kind;
  int out_ch;   // conv layers
  int ksize;    // conv layers
  int stride;   // conv layers
  bool with_bn;
  bool with_relu;
};

std::vector<ChainStep> conv_plan(const NetworkConfig& c) {
  int n = static_cast<int>(c.conv_widths.size());
  std::vector<ChainStep> plan;
  for (int i = 0; i < c.down_convs; ++i) {
    plan.push_back({LayerKind::kConv, c.conv_widths[i], c.conv_sizes[i], 1, true, true});
    plan.push_back({LayerKind::kDownConv, c.conv_widths[i], 2, 2, false, true});
  }
  for (int i = c.down_convs; i < n - 1; ++i)
    plan.push_back({LayerKind::kConv, c.conv_widths[i], c.conv_sizes[i], 1, true, true});
  plan.push_back({LayerKind::kConv, c.conv_widths[n - 1], c.conv_sizes[n - 1], 1, false, true});
  plan.push_back({LayerKind::kConv, c.kernel_len(), c.conv_sizes[n], 1, false, false});
  return plan;
}

}  // namespace

void validate_config(const NetworkConfig& config) {
  if (config.receptive_field < 3 || config.receptive_field % 2 == 0)
    throw ConfigError("receptive field must be odd and >= 3, got " +
                      std::to_string(config.receptive_field));
  if (config.patch_size < 1 || config.patch_size % 2 == 0)
    throw ConfigError("patch size must be odd and >= 1, got " +
                      std::to_string(config.patch_size));
  if (config.patch_size > config.receptive_field)
    throw ConfigError("patch size exceeds receptive field");
  int n = static_cast<int>(config.conv_widths.size());
  if (n < 2) throw ConfigError("config needs at least two conv widths");
  if (static_cast<int>(config.conv_sizes.size()) != n + 1)
    throw ConfigError("config needs one more conv size than widths (final 1x1 included)");
  if (config.down_convs < 0 || config.down_convs > n - 2)
    throw ConfigError("down-conv count must lie in [0, widths-2]");
  if (config.conv_sizes.back() != 1) throw ConfigError("final conv must be 1x1");
  compute_shape_chain(config);
}

std::vector<LayerShape> compute_shape_chain(const NetworkConfig& config) {
  std::vector<LayerShape> shapes;
  int ch = 6, h = config.receptive_field, w = config.receptive_field;
  shapes.push_back({"input", ch, h, w});
  auto plan = conv_plan(config);
  for (size_t i = 0; i < plan.size(); ++i) {
    const ChainStep& s = plan[i];
    std::string label = (s.kind == LayerKind::kDownConv ? "down-conv " : "conv ") +
                        std::to_string(s.ksize) + "x" + std::to_string(s.ksize);
    if (s.ksize > h || s.ksize > w)
      throw ConfigError("layer " + std::to_string(i + 1) + " (" + label + "): input " +
                        std::to_string(h) + "x" + std::to_string(w) + " smaller than kernel");
    h = (h - s.ksize) / s.stride + 1;
    w = (w - s.ksize) / s.stride + 1;
    ch = s.out_ch;
    if (h < 1 || w < 1)
      throw ConfigError("layer " + std::to_string(i + 1) + " (" + label + "): empty output");
    shapes.push_back({label, ch, h, w});
    if (i + 2 == plan.size() && (h != 1 || w != 1))
      throw ConfigError("layer " + std::to_string(i + 1) + " (" + label +
                        "): expected 1x1 spatial output before the final 1x1 conv, got " +
                        std::to_string(h) + "x" + std::to_string(w));
  }
  shapes.push_back({"softmax", ch, h, w});
  return shapes;
}

template <typename T>
std::vector<TensorT<T>*> KernelNetT<T>::parameters() {
  std::vector<TensorT<T>*> out;
  for (auto& l : layers) {
    if (l.kind == LayerKind::kConv || l.kind == LayerKind::kDownConv) {
      out.push_back(&l.conv.weights);
      out.push_back(&l.conv.bias);
    } else if (l.kind == LayerKind::kBatchNorm) {
      out.push_back(&l.bn.gamma);
      out.push_back(&l.bn.beta);
    }
  }
  return out;
}

template <typename T>
std::vector<const TensorT<T>*> KernelNetT<T>::parameters() const {
  auto mut = const_cast<KernelNetT<T>*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

template <typename T>
std::vector<TensorT<T>*> KernelNetT<T>::state_tensors() {
  std::vector<TensorT<T>*> out;
  for (auto& l : layers) {
    if (l.kind == LayerKind::kConv || l.kind == LayerKind::kDownConv) {
      out.push_back(&l.conv.weights);
      out.push_back(&l.conv.bias);
    } else if (l.kind == LayerKind::kBatchNorm) {
      out.push_back(&l.bn.gamma);
      out.push_back(&l.bn.beta);
      out.push_back(&l.bn.running_mean);
      out.push_back(&l.bn.running_var);
    }
  }
  return out;
}

template <typename T>
std::vector<const TensorT<T>*> KernelNetT<T>::state_tensors() const {
  auto mut = const_cast<KernelNetT<T>*>(this)->state_tensors();
  return {mut.begin(), mut.end()};
}

template <typename T>
KernelNetT<T> init_network(const NetworkConfig& config, uint64_t seed) {
  validate_config(config);
  KernelNetT<T> net;
  net.config = config;
  Rng rng(seed);
  int in_ch = 6;
  for (const ChainStep& s : conv_plan(config)) {
    NetLayer<T> conv_layer;
    conv_layer.kind = s.kind;
    conv_layer.conv.weights = TensorT<T>({s.out_ch, in_ch, s.ksize, s.ksize});
    conv_layer.conv.bias = TensorT<T>({s.out_ch});
    conv_layer.conv.stride_h = s.stride;
    conv_layer.conv.stride_w = s.stride;
    double fan_in = static_cast<double>(in_ch) * s.ksize * s.ksize;
    double fan_out = static_cast<double>(s.out_ch) * s.ksize * s.ksize;
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (size_t i = 0; i < conv_layer.conv.weights.size(); ++i)
      conv_layer.conv.weights[i] = static_cast<T>(rng.uniform(-bound, bound));
    net.layers.push_back(std::move(conv_layer));
    if (s.with_bn) {
      NetLayer<T> bn_layer;
      bn_layer.kind = LayerKind::kBatchNorm;
      bn_layer.bn = BatchNormParams<T>::init(s.out_ch);
      net.layers.push_back(std::move(bn_layer));
    }
    if (s.with_relu) {
      net.layers.push_back(NetLayer<T>{LayerKind::kRelu, {}, {}});
    }
    in_ch = s.out_ch;
  }
  net.layers.push_back(NetLayer<T>{LayerKind::kSoftmax, {}, {}});
  return net;
}

template <typename T>
TensorT<T> net_forward(KernelNetT<T>& net, const TensorT<T>& input, Phase phase,
                       ForwardCache<T>* cache, bool update_running, int threads) {
  if (cache) {
    cache->acts.clear();
    cache->bn_caches.assign(net.layers.size(), {});
    cache->valid = false;
    cache->acts.push_back(input);
  }
  TensorT<T> x = input;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    NetLayer<T>& l = net.layers[i];
    switch (l.kind) {
      case LayerKind::kConv:
      case LayerKind::kDownConv:
        x = conv2d_forward(x, l.conv, threads);
        break;
      case LayerKind::kBatchNorm:
        x = batch_norm_forward(x, l.bn, phase, cache ? &cache->bn_caches[i] : nullptr,
                               update_running);
        break;
      case LayerKind::kRelu:
        x = relu_forward(x);
        break;
      case LayerKind::kSoftmax:
        x = spatial_softmax_forward(x);
        break;
    }
    if (cache) cache->acts.push_back(x);
  }
  if (cache) cache->valid = true;
  return x;
}

template <typename T>
TensorT<T> net_infer(const KernelNetT<T>& net, const TensorT<T>& input, int threads) {
  // Infer phase never mutates the network (running statistics are read-only).
  auto& mut = const_cast<KernelNetT<T>&>(net);
  return net_forward(mut, input, Phase::kInfer, static_cast<ForwardCache<T>*>(nullptr), false,
                     threads);
}

template <typename T>
NetGradients<T> net_backward(const KernelNetT<T>& net, const ForwardCache<T>& cache,
                             const TensorT<T>& d_kernel, int threads) {
  if (!cache.valid || cache.acts.size() != net.layers.size() + 1)
    throw StateError("net_backward called without a cached forward pass");
  NetGradients<T> out;
  size_t param_count = 0;
  for (const auto& l : net.layers)
    if (l.kind != LayerKind::kRelu && l.kind != LayerKind::kSoftmax) param_count += 2;
  out.params.resize(param_count);

  TensorT<T> d = d_kernel;
  size_t slot = param_count;
  for (size_t ri = net.layers.size(); ri-- > 0;) {
    const NetLayer<T>& l = net.layers[ri];
    const TensorT<T>& x = cache.acts[ri];
    const TensorT<T>& y = cache.acts[ri + 1];
    switch (l.kind) {
      case LayerKind::kSoftmax:
        d = spatial_softmax_backward(y, d);
        break;
      case LayerKind::kRelu:
        d = relu_backward(x, d);
        break;
      case LayerKind::kBatchNorm: {
        auto res = batch_norm_backward(x, l.bn, cache.bn_caches[ri], d);
        slot -= 2;
        out.params[slot] = std::move(res.d_gamma);
        out.params[slot + 1] = std::move(res.d_beta);
        d = std::move(res.d_input);
        break;
      }
      case LayerKind::kConv:
      case LayerKind::kDownConv: {
        auto res = conv2d_backward(x, l.conv, d, threads);
        slot -= 2;
        out.params[slot] = std::move(res.d_weights);
        out.params[slot + 1] = std::move(res.d_bias);
        d = std::move(res.d_input);
        break;
      }
    }
  }
  out.d_input = std::move(d);
  return out;
}

template <typename T>
KernelPairT<T> split_kernel(const T* flat, int k) {
  KernelPairT<T> pair;
  pair.k1 = TensorT<T>({k, k});
  pair.k2 = TensorT<T>({k, k});
  for (int y = 0; y < k; ++y) {
    const T* row = flat + static_cast<size_t>(y) * 2 * k;
    for (int x = 0; x < k; ++x) {
      pair.k1[static_cast<size_t>(y) * k + x] = row[x];
      pair.k2[static_cast<size_t>(y) * k + x] = row[x + k];
    }
  }
  return pair;
}

template <typename T>
KernelPairT<T> split_kernel(const TensorT<T>& flat, int k) {
  if (static_cast<int>(flat.size()) != 2 * k * k)
    throw ShapeError("split_kernel: " + flat.dims_string() + " does not hold " +
                     std::to_string(2 * k * k) + " coefficients");
  return split_kernel(flat.data(), k);
}

template <typename T>
TensorT<T> merge_kernel(const KernelPairT<T>& pair) {
  int k = pair.k1.dim(0);
  require_same_dims(pair.k1, pair.k2, "merge_kernel");
  TensorT<T> flat({2 * k * k});
  for (int y = 0; y < k; ++y) {
    T* row = flat.data() + static_cast<size_t>(y) * 2 * k;
    for (int x = 0; x < k; ++x) {
      row[x] = pair.k1[static_cast<size_t>(y) * k + x];
      row[x + k] = pair.k2[static_cast<size_t>(y) * k + x];
    }
  }
  return flat;
}

template <typename T>
KernelPairT<T> forward_kernel(KernelNetT<T>& net, const TensorT<T>& r1, const TensorT<T>& r2,
                              Phase phase) {
  int r = net.config.receptive_field;
  std::vector<int> want = {3, r, r};
  if (r1.dims() != want || r2.dims() != want)
    throw ShapeError("forward_kernel: patches " + r1.dims_string() + ", " + r2.dims_string() +
                     " vs expected " + TensorT<T>::dims_string(want));
  TensorT<T> input({1, 6, r, r});
  std::memcpy(input.data(), r1.data(), r1.size() * sizeof(T));
  std::memcpy(input.data() + r1.size(), r2.data(), r2.size() * sizeof(T));
  TensorT<T> kernels = net_forward(net, input, phase, static_cast<ForwardCache<T>*>(nullptr),
                                   phase == Phase::kTrain);
  return split_kernel(kernels.data(), net.config.patch_size);
}

namespace {

constexpr char kMagic[4] = {'A', 'D', 'K', 'N'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw FormatError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const KernelNetT<float>& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  const NetworkConfig& c = net.config;
  write_u32(os, static_cast<uint32_t>(c.receptive_field));
  write_u32(os, static_cast<uint32_t>(c.patch_size));
  write_u32(os, static_cast<uint32_t>(c.down_convs));
  write_u32(os, static_cast<uint32_t>(c.conv_widths.size()));
  for (int w : c.conv_widths) write_u32(os, static_cast<uint32_t>(w));
  write_u32(os, static_cast<uint32_t>(c.conv_sizes.size()));
  for (int s : c.conv_sizes) write_u32(os, static_cast<uint32_t>(s));
  for (const Tensor* t : net.state_tensors()) write_tensor_record(os, *t);
  if (!os) throw FormatError("checkpoint write failed: " + path);
}

KernelNetT<float> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("checkpoint magic mismatch: " + path);
  uint32_t version = read_u32(is);
  if (version != kVersion)
    throw FormatError("checkpoint version " + std::to_string(version) + " unsupported");
  NetworkConfig c;
  c.receptive_field = static_cast<int>(read_u32(is));
  c.patch_size = static_cast<int>(read_u32(is));
  c.down_convs = static_cast<int>(read_u32(is));
  uint32_t widths = read_u32(is);
  if (widths > 64) throw FormatError("checkpoint width count implausible");
  c.conv_widths.resize(widths);
  for (auto& w : c.conv_widths) w = static_cast<int>(read_u32(is));
  uint32_t sizes = read_u32(is);
  if (sizes > 64) throw FormatError("checkpoint size count implausible");
  c.conv_sizes.resize(sizes);
  for (auto& s : c.conv_sizes) s = static_cast<int>(read_u32(is));

  KernelNetT<float> net = init_network<float>(c, 0);
  for (Tensor* t : net.state_tensors()) {
    Tensor stored = read_tensor_record(is);
    if (stored.dims() != t->dims())
      throw ConfigError("checkpoint tensor " + stored.dims_string() +
                        " does not match architecture " + t->dims_string());
    *t = std::move(stored);
  }
  return net;
}

#define ADACONV_INSTANTIATE_NET(T)                                                             \
  template struct KernelNetT<T>;                                                               \
  template KernelNetT<T> init_network<T>(const NetworkConfig&, uint64_t);                      \
  template TensorT<T> net_forward<T>(KernelNetT<T>&, const TensorT<T>&, Phase,                 \
                                     ForwardCache<T>*, bool, int);                             \
  template TensorT<T> net_infer<T>(const KernelNetT<T>&, const TensorT<T>&, int);              \
  template NetGradients<T> net_backward<T>(const KernelNetT<T>&, const ForwardCache<T>&,      \
                                           const TensorT<T>&, int);                            \
  template KernelPairT<T> split_kernel<T>(const T*, int);                                      \
  template KernelPairT<T> split_kernel<T>(const TensorT<T>&, int);                             \
  template TensorT<T> merge_kernel<T>(const KernelPairT<T>&);                                  \
  template KernelPairT<T> forward_kernel<T>(KernelNetT<T>&, const TensorT<T>&,                 \
                                            const TensorT<T>&, Phase);

ADACONV_INSTANTIATE_NET(float)
ADACONV_INSTANTIATE_NET(double)

}  // namespace adaconv

#include "adaconv/train.hpp"

#include <cmath>
#include <cstring>
#include <ostream>
#include <sstream>

#include "adaconv/errors.hpp"
#include "adaconv/synth.hpp"

namespace adaconv {

template <typename T>
void adamax_step(AdaMaxStateT<T>& state, const std::vector<TensorT<T>*>& params,
                 const std::vector<TensorT<T>>& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeError("adamax_step: parameter/gradient/state counts differ");
  state.step_count += 1;
  T correction = state.alpha / (T(1) - std::pow(state.beta1, static_cast<T>(state.step_count)));
  for (size_t i = 0; i < params.size(); ++i) {
    TensorT<T>& p = *params[i];
    const TensorT<T>& g = grads[i];
    if (!p.same_dims(g) || !p.same_dims(state.m[i]))
      throw ShapeError("adamax_step: shape mismatch at parameter " + std::to_string(i) + ": " +
                       p.dims_string() + " vs " + g.dims_string());
    T* m = state.m[i].data();
    T* u = state.u[i].data();
    T* theta = p.data();
    const T* grad = g.data();
    for (size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (T(1) - state.beta1) * grad[j];
      u[j] = std::max(state.beta2 * u[j], std::abs(grad[j]));
      if (u[j] != T(0)) theta[j] -= correction * m[j] / u[j];
    }
  }
}

template void adamax_step<float>(AdaMaxStateT<float>&, const std::vector<Tensor*>&,
                                 const std::vector<Tensor>&);
template void adamax_step<double>(AdaMaxStateT<double>&, const std::vector<TensorT<double>*>&,
                                  const std::vector<TensorT<double>>&);

std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> split_validation(
    const std::vector<SampleRecord>& dataset, float fraction) {
  size_t held = static_cast<size_t>(std::floor(fraction * static_cast<float>(dataset.size())));
  held = std::min(held, dataset.size());
  size_t train_count = dataset.size() - held;
  std::vector<SampleRecord> train(dataset.begin(), dataset.begin() + train_count);
  std::vector<SampleRecord> val(dataset.begin() + train_count, dataset.end());
  return {std::move(train), std::move(val)};
}

TrainStats train_loop(KernelNet& net, const std::vector<SampleRecord>& dataset,
                      const TrainConfig& config) {
  if (dataset.empty()) throw DatasetError("train_loop: empty dataset");
  if (config.batch_size < 2)
    throw ConfigError("train_loop: batch size must be >= 2 for batch norm");
  auto [train_set, val_set] = split_validation(dataset, config.validation_fraction);
  if (train_set.empty()) throw DatasetError("train_loop: no training samples after split");
  (void)val_set;

  int r = net.config.receptive_field;
  int k = net.config.patch_size;
  int kernel_len = net.config.kernel_len();
  int batch = config.batch_size;
  Rng rng(config.seed);
  auto params = net.parameters();
  AdaMaxState opt = AdaMaxState::init(params);
  opt.alpha = config.learning_rate;
  TrainStats stats;

  std::vector<TrainingSample> samples(static_cast<size_t>(batch));
  std::vector<int> ids(static_cast<size_t>(batch));
  Tensor input({batch, 6, r, r});
  size_t half = static_cast<size_t>(3) * r * r;

  for (int step = 1; step <= config.steps; ++step) {
    for (int b = 0; b < batch; ++b) {
      ids[b] = rng.uniform_int(0, static_cast<int>(train_set.size()) - 1);
      samples[b] = augment_sample(train_set[static_cast<size_t>(ids[b])], net.config, rng);
      float* dst = input.data() + static_cast<size_t>(b) * 2 * half;
      std::memcpy(dst, samples[b].r1.data(), half * sizeof(float));
      std::memcpy(dst + half, samples[b].r2.data(), half * sizeof(float));
    }

    ForwardCache<float> cache;
    Tensor kernels = net_forward(net, input, Phase::kTrain, &cache, true, config.threads);

    Tensor d_kernels({batch, kernel_len, 1, 1});
    double color_sum = 0.0, grad_sum = 0.0;
    float inv_batch = 1.f / static_cast<float>(batch);
    for (int b = 0; b < batch; ++b) {
      const float* flat = kernels.data() + static_cast<size_t>(b) * kernel_len;
      KernelPair kernel = split_kernel(flat, k);
      const TrainingSample& s = samples[b];
      Color<float> predicted = synthesize_pixel(center_patches(s.patches), kernel);
      color_sum += color_loss(predicted, s.truth.color);
      if (config.lambda != 0.f) grad_sum += gradient_loss(s.patches, kernel, s.truth);
      Tensor d = loss_gradient_wrt_kernel(s.patches, kernel, s.truth, config.lambda);
      float* dst = d_kernels.data() + static_cast<size_t>(b) * kernel_len;
      for (int i = 0; i < kernel_len; ++i) dst[i] = d[static_cast<size_t>(i)] * inv_batch;
    }
    float color_mean = static_cast<float>(color_sum / batch);
    float grad_mean = static_cast<float>(grad_sum / batch);
    float loss_mean = color_mean + config.lambda * grad_mean;
    if (!std::isfinite(loss_mean)) {
      std::ostringstream os;
      os << "train_loop: non-finite loss at step " << step << " (samples";
      for (int b = 0; b < batch; ++b) os << " " << ids[b];
      os << ")";
      throw StateError(os.str());
    }
    stats.loss.push_back(loss_mean);
    stats.color.push_back(color_mean);
    stats.grad.push_back(grad_mean);

    NetGradients<float> grads = net_backward(net, cache, d_kernels, config.threads);
    adamax_step(opt, params, grads.params);

    if (config.log)
      (*config.log) << "step " << step << " loss " << loss_mean << " color " << color_mean
                    << " grad " << grad_mean << "\n";
    if (config.checkpoint_every > 0 && !config.checkpoint_path.empty() &&
        step % config.checkpoint_every == 0)
      save_checkpoint(net, config.checkpoint_path);
  }
  if (!config.checkpoint_path.empty()) save_checkpoint(net, config.checkpoint_path);
  return stats;
}

ValidationStats validate(const KernelNet& net, const std::vector<SampleRecord>& holdout,
                         float lambda, int threads) {
  if (holdout.empty()) throw DatasetError("validate: empty holdout set");
  int r = net.config.receptive_field;
  int k = net.config.patch_size;
  int kernel_len = net.config.kernel_len();
  size_t half = static_cast<size_t>(3) * r * r;
  double color_sum = 0.0, total_sum = 0.0;

  size_t pos = 0;
  while (pos < holdout.size()) {
    int chunk = static_cast<int>(std::min<size_t>(64, holdout.size() - pos));
    Tensor input({chunk, 6, r, r});
    std::vector<TrainingSample> samples(static_cast<size_t>(chunk));
    for (int b = 0; b < chunk; ++b) {
      samples[b] = center_sample(holdout[pos + b], net.config);
      float* dst = input.data() + static_cast<size_t>(b) * 2 * half;
      std::memcpy(dst, samples[b].r1.data(), half * sizeof(float));
      std::memcpy(dst + half, samples[b].r2.data(), half * sizeof(float));
    }
    Tensor kernels = net_infer(net, input, threads);
    for (int b = 0; b < chunk; ++b) {
      KernelPair kernel = split_kernel(kernels.data() + static_cast<size_t>(b) * kernel_len, k);
      const TrainingSample& s = samples[b];
      Color<float> predicted = synthesize_pixel(center_patches(s.patches), kernel);
      float c = color_loss(predicted, s.truth.color);
      color_sum += c;
      total_sum += c + lambda * gradient_loss(s.patches, kernel, s.truth);
    }
    pos += static_cast<size_t>(chunk);
  }
  ValidationStats stats;
  stats.mean_color_loss = static_cast<float>(color_sum / static_cast<double>(holdout.size()));
  stats.mean_total_loss = static_cast<float>(total_sum / static_cast<double>(holdout.size()));
  return stats;
}

}  // namespace adaconv

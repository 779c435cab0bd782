#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "adaconv/data.hpp"
#include "adaconv/net.hpp"
#include "adaconv/tensor.hpp"

namespace adaconv {

// Per-parameter first moment and infinity-norm accumulator. The update is
//   t <- t + 1
//   m <- beta1 * m + (1 - beta1) * g
//   u <- max(beta2 * u, |g|)
//   theta <- theta - (alpha / (1 - beta1^t)) * m / u     (skipped where u == 0)
// in exactly this arithmetic order.
template <typename T>
struct AdaMaxStateT {
  std::vector<TensorT<T>> m, u;
  long long step_count = 0;
  T alpha = T(0.001);
  T beta1 = T(0.9);
  T beta2 = T(0.999);

  static AdaMaxStateT init(const std::vector<TensorT<T>*>& params) {
    AdaMaxStateT s;
    for (const TensorT<T>* p : params) {
      s.m.emplace_back(p->dims());
      s.u.emplace_back(p->dims());
    }
    return s;
  }
};

using AdaMaxState = AdaMaxStateT<float>;

template <typename T>
void adamax_step(AdaMaxStateT<T>& state, const std::vector<TensorT<T>*>& params,
                 const std::vector<TensorT<T>>& grads);

struct TrainConfig {
  int batch_size = 128;
  int steps = 1000;
  uint64_t seed = 1;
  float lambda = 1.f;
  float learning_rate = 0.001f;
  float validation_fraction = 0.1f;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::string checkpoint_path;
  int threads = 1;
  std::ostream* log = nullptr;  // "step <n> loss <v> color <v> grad <v>" per step
};

struct TrainStats {
  std::vector<float> loss;   // per-step batch means
  std::vector<float> color;
  std::vector<float> grad;
};

// AdaMax over mini-batches assembled with on-the-fly augmentation. The last
// validation_fraction of the dataset (manifest order) is held out. Batch
// reductions run in index order, so results are identical for any thread
// count. A non-finite loss aborts with the step and sample ids.
TrainStats train_loop(KernelNet& net, const std::vector<SampleRecord>& dataset,
                      const TrainConfig& config);

struct ValidationStats {
  float mean_color_loss = 0.f;
  float mean_total_loss = 0.f;
};

// Infer-phase forward over center-cropped samples; side-effect free.
ValidationStats validate(const KernelNet& net, const std::vector<SampleRecord>& holdout,
                         float lambda, int threads = 1);

// Manifest-order split: the trailing fraction is the validation set.
std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> split_validation(
    const std::vector<SampleRecord>& dataset, float fraction);

}  // namespace adaconv

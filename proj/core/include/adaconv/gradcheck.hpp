#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adaconv/errors.hpp"
#include "adaconv/rng.hpp"
#include "adaconv/tensor.hpp"

namespace adaconv {

// One differentiable quantity to verify: a mutable buffer (parameter tensor or
// input) together with the analytic gradient the backward pass produced for it.
template <typename T>
struct GradCheckItem {
  std::string name;
  T* values = nullptr;
  const T* analytic = nullptr;
  size_t count = 0;
};

struct GradCheckOptions {
  double perturbation = 1e-5;  // central-difference step, must lie in [1e-7, 1e-3]
  // 0 checks every element; otherwise at most this many seeded-random elements
  // per item (large nets cannot afford two loss evaluations per parameter).
  size_t max_checks_per_item = 0;
  uint64_t seed = 17;
  // Excuse a failing measurement only when the symmetric second difference
  // shows the step straddled a kink (relu / l1 subgradients). Central
  // differences are meaningless across a kink; a wrong analytic gradient
  // stays visible at smooth points, where the second difference vanishes.
  bool skip_kinks = false;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_item;
  size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t checked = 0;
  size_t kink_skipped = 0;
};

// Central finite differences of a scalar loss against analytic gradients.
// The loss callable must recompute the full forward pass from the current
// buffer contents. Relative error uses max(|fd|, |analytic|, 1e-4) as the
// denominator so that near-zero gradients are compared absolutely.
template <typename T>
GradCheckReport check_gradients(const std::function<double()>& loss,
                                std::vector<GradCheckItem<T>> items,
                                const GradCheckOptions& options = {}) {
  if (options.perturbation < 1e-7 || options.perturbation > 1e-3)
    throw ArgumentError("check_gradients: perturbation " + std::to_string(options.perturbation) +
                        " outside [1e-7, 1e-3]");
  GradCheckReport report;
  Rng rng(options.seed);
  T eps = static_cast<T>(options.perturbation);
  double center = options.skip_kinks ? loss() : 0.0;
  for (const auto& item : items) {
    std::vector<size_t> indices;
    if (options.max_checks_per_item == 0 || item.count <= options.max_checks_per_item) {
      indices.resize(item.count);
      for (size_t i = 0; i < item.count; ++i) indices[i] = i;
    } else {
      indices.reserve(options.max_checks_per_item);
      for (size_t i = 0; i < options.max_checks_per_item; ++i)
        indices.push_back(static_cast<size_t>(
            rng.uniform_int(0, static_cast<int>(item.count) - 1)));
    }
    for (size_t idx : indices) {
      T saved = item.values[idx];
      item.values[idx] = saved + eps;
      double plus = loss();
      item.values[idx] = saved - eps;
      double minus = loss();
      item.values[idx] = saved;
      double fd = (plus - minus) / (2.0 * static_cast<double>(eps));
      double an = static_cast<double>(item.analytic[idx]);
      double denom = std::max({std::fabs(fd), std::fabs(an), 1e-4});
      double rel = std::fabs(fd - an) / denom;
      if (options.skip_kinks && rel > report.max_relative_error) {
        double second_diff =
            std::fabs(plus + minus - 2.0 * center) / (2.0 * static_cast<double>(eps));
        if (second_diff >= 0.5 * std::fabs(fd - an)) {
          ++report.kink_skipped;
          continue;
        }
      }
      ++report.checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_item = item.name;
        report.worst_index = idx;
        report.worst_analytic = an;
        report.worst_numeric = fd;
      }
    }
  }
  return report;
}

}  // namespace adaconv

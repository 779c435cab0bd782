#include "adaconv/metrics.hpp"

#include <cmath>

#include "adaconv/errors.hpp"

namespace adaconv {

namespace {

double mean_squared_error(const Frame& a, const Frame& b) {
  if (!a.same_size(b)) throw ShapeError("metric: frame sizes differ");
  double sum = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

}  // namespace

double psnr(const Frame& a, const Frame& b) {
  double mse = mean_squared_error(a, b);
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double interpolation_error(const Frame& predicted, const Frame& truth) {
  return 255.0 * std::sqrt(mean_squared_error(predicted, truth));
}

}  // namespace adaconv

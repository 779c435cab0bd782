#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "adaconv/errors.hpp"

namespace adaconv {

// Dense row-major tensor, width fastest. Rank 3 is (channels, height, width),
// rank 4 prepends the batch dimension.
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<int> dims) : dims_(std::move(dims)) {
    size_t n = 1;
    for (int d : dims_) {
      if (d <= 0) throw ShapeError("tensor extent must be positive, got " + dims_string(dims_));
      n *= static_cast<size_t>(d);
    }
    data_.assign(n, T(0));
  }

  TensorT(std::initializer_list<int> dims) : TensorT(std::vector<int>(dims)) {}

  static TensorT full(std::vector<int> dims, T value) {
    TensorT t(std::move(dims));
    t.fill(value);
    return t;
  }

  int rank() const { return static_cast<int>(dims_.size()); }
  int dim(int i) const { return dims_[static_cast<size_t>(i)]; }
  const std::vector<int>& dims() const { return dims_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  // (c, y, x) for rank 3
  T& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }
  const T& at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }

  // (n, c, y, x) for rank 4
  T& at(int n, int c, int y, int x) {
    return data_[((static_cast<size_t>(n) * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
  }
  const T& at(int n, int c, int y, int x) const {
    return data_[((static_cast<size_t>(n) * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_dims(const TensorT& other) const { return dims_ == other.dims_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out(dims_);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  static std::string dims_string(const std::vector<int>& dims) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
    os << "]";
    return os.str();
  }
  std::string dims_string() const { return dims_string(dims_); }

 private:
  std::vector<int> dims_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;

template <typename T>
void require_same_dims(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
  if (!a.same_dims(b))
    throw ShapeError(std::string(what) + ": dims " + a.dims_string() + " vs " + b.dims_string());
}

}  // namespace adaconv

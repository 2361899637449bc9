#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace triage {

/// Cache-line aligned storage, so vectorized kernels take the same code path on every run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <class U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

/// Dense fp64 array, row-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::initializer_list<std::size_t> shape, double fill = 0.0)
      : Tensor(std::vector<std::size_t>(shape), fill) {}

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_[1] + c]; }

  /// Pointer to row r of a rank >= 2 tensor viewed as (dim0, rest).
  double* row(std::size_t r) noexcept { return data_.data() + r * (data_.size() / shape_[0]); }
  const double* row(std::size_t r) const noexcept {
    return data_.data() + r * (data_.size() / shape_[0]);
  }

  void fill(double value) noexcept;
  bool all_finite() const noexcept;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double, AlignedAllocator<double>> data_;
};

struct NamedTensor {
  std::string name;
  Tensor value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Learned parameters (or their gradients) in a fixed, model-defined order.
using ParameterSet = std::vector<NamedTensor>;

/// Same names and shapes, all zeros.
ParameterSet zeros_like(const ParameterSet& params);
std::size_t parameter_count(const ParameterSet& params) noexcept;

}  // namespace triage

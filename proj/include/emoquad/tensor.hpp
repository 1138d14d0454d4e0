#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emoquad/error.hpp"

namespace emoquad {

using MatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatrixMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw StructuralError("tensor data length does not match its shape");
    }
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> row(std::size_t r) {
    const std::size_t width = data_.size() / shape_.at(0);
    return std::span<double>(data_).subspan(r * width, width);
  }
  std::span<const double> row(std::size_t r) const {
    const std::size_t width = data_.size() / shape_.at(0);
    return std::span<const double>(data_).subspan(r * width, width);
  }

  /// Views the tensor as a matrix of shape (dim 0, product of the rest).
  MatrixMap matrix() {
    return MatrixMap(data_.data(), static_cast<Eigen::Index>(leading()),
                     static_cast<Eigen::Index>(trailing()));
  }
  ConstMatrixMap matrix() const {
    return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(leading()),
                          static_cast<Eigen::Index>(trailing()));
  }
  VectorMap vector() { return VectorMap(data_.data(), static_cast<Eigen::Index>(data_.size())); }
  ConstVectorMap vector() const {
    return ConstVectorMap(data_.data(), static_cast<Eigen::Index>(data_.size()));
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const Tensor&) const = default;

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  std::size_t leading() const { return shape_.empty() ? 1 : shape_[0]; }
  std::size_t trailing() const { return shape_.empty() ? 1 : data_.size() / std::max<std::size_t>(shape_[0], 1); }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

inline void require_finite(const Tensor& t, const std::string& what) {
  if (!t.all_finite()) throw NumericError("non-finite value in " + what);
}

}  // namespace emoquad

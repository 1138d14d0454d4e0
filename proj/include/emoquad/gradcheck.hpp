#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "emoquad/error.hpp"
#include "emoquad/model.hpp"
#include "emoquad/vocab.hpp"

namespace emoquad {

/// Central differences (f(x + eps) - f(x - eps)) / (2 eps) for every
/// coordinate of `theta`. `theta` is perturbed in place and restored.
template <typename Loss>
std::vector<double> finite_diff_grad(Loss&& loss, std::span<double> theta, double eps) {
  if (!(eps > 0.0)) throw StructuralError("finite_diff_grad: eps must be positive");
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + eps;
    const double up = loss();
    theta[i] = saved - eps;
    const double down = loss();
    theta[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

/// Central-difference gradient over every model parameter. The PAD
/// embedding row is frozen and reported as zero.
inline ModelParams finite_diff_grad(const std::function<double(const ModelParams&)>& loss,
                                    ModelParams params, double eps) {
  ModelParams grads = ModelParams::zeros_like(params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params.tensor(i);
    std::span<double> coords = t.data();
    if (i == 0) coords = coords.subspan(t.dim(1));  // skip the PAD row
    auto g = finite_diff_grad([&] { return loss(params); }, coords, eps);
    std::copy(g.begin(), g.end(), grads.tensor(i).values().end() - static_cast<std::ptrdiff_t>(g.size()));
  }
  return grads;
}

/// |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradientComparison {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

inline GradientComparison compare_gradients(const ModelParams& analytic, const ModelParams& numeric,
                                            double floor = 1e-8) {
  if (analytic.size() != numeric.size()) throw StructuralError("gradient layouts differ");
  GradientComparison worst;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const Tensor& a = analytic.tensor(i);
    const Tensor& n = numeric.tensor(i);
    if (a.shape() != n.shape()) throw StructuralError("gradient shapes differ for " + analytic.name(i));
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double err = relative_error(a[k], n[k], floor);
      if (err > worst.max_relative_error || worst.worst_parameter.empty()) {
        worst = {err, analytic.name(i), k, a[k], n[k]};
      }
    }
  }
  return worst;
}

}  // namespace emoquad

#pragma once

// Central finite-difference verification of analytic gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace elastic {

// d f / d params by central differences. params is perturbed in place and restored.
inline std::vector<double> finite_difference_gradient(const std::function<double()>& f, std::span<double> params,
                                                      double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = f();
    params[i] = saved - h;
    const double down = f();
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = true;
};

// Entry i passes when |a - n| <= abs_tol or |a - n| / max(|a|, |n|) <= rel_tol.
inline GradientCheckResult compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                             double rel_tol = 1e-4, double abs_tol = 1e-7) {
  GradientCheckResult r;
  if (analytic.size() != numeric.size()) {
    r.passed = false;
    return r;
  }
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic[i] - numeric[i]);
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    const double rel = scale > 0.0 ? diff / scale : 0.0;
    if (diff > abs_tol && rel > r.max_relative_error) {
      r.max_relative_error = rel;
      r.worst_index = i;
    }
    r.max_absolute_error = std::max(r.max_absolute_error, diff);
    if (diff > abs_tol && rel > rel_tol) r.passed = false;
  }
  return r;
}

}  // namespace elastic

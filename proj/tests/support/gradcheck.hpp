// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference oracle for reverse-mode gradients. Only reads
// and perturbs tensor values; it never consults the backward rules.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "slotgen/num/autodiff.hpp"
#include "slotgen/num/random.hpp"

namespace slotgen::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / denom;
}

/// `loss` builds a scalar from the current values of `inputs`. It is called
/// once under a Graph for the analytic gradient and then twice per checked
/// element without a Graph. `max_per_tensor` caps the elements checked per
/// input (0 = all); sampled indices are spread deterministically.
inline GradCheckResult grad_check(const std::function<num::Var()>& loss, std::vector<num::Var> inputs,
                                  double eps = 1e-5, std::size_t max_per_tensor = 0,
                                  std::vector<std::string> names = {}) {
  for (auto& v : inputs) v.zero_grad();
  {
    num::Graph g;
    g.backward(loss());
  }
  GradCheckResult res;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto& var = inputs[k];
    const std::size_t n = var.value().size();
    std::vector<std::size_t> idx;
    if (max_per_tensor == 0 || n <= max_per_tensor) {
      for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    } else {
      num::Rng pick(0x5eed + k);
      for (std::size_t i = 0; i < max_per_tensor; ++i) idx.push_back(pick.below(n));
    }
    for (std::size_t i : idx) {
      double& x = var.mutable_value()[i];
      const double saved = x;
      x = saved + eps;
      const double up = loss().item();
      x = saved - eps;
      const double down = loss().item();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = var.has_grad() ? var.grad()[i] : 0.0;
      const double err = relative_error(analytic, numeric);
      ++res.checked;
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        char vals[64];
        std::snprintf(vals, sizeof vals, "] analytic=%.3e numeric=%.3e", analytic, numeric);
        res.worst = (k < names.size() ? names[k] : "input " + std::to_string(k)) + "[" + std::to_string(i) + vals;
      }
    }
  }
  return res;
}

inline num::Tensor random_tensor(std::size_t rows, std::size_t cols, num::Rng& rng, double lo = -2.0,
                                 double hi = 2.0) {
  num::Tensor t = num::Tensor::zeros(rows, cols);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace slotgen::testing

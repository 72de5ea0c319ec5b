// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slotgen/num/autodiff.hpp"
#include "slotgen/num/random.hpp"

namespace slotgen::num {

/// Ordered collection of named trainable leaves. Insertion order is the
/// checkpoint order.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Var var;
  };

  /// Registers a new parameter; names must be unique.
  Var add(const std::string& name, Tensor init);
  /// Uniform in +-1/sqrt(fan_in), fan_in = rows of the weight matrix.
  Var add_uniform(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Var add_zeros(const std::string& name, std::size_t rows, std::size_t cols);

  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  /// Global L2 norm of all gradients.
  double grad_norm() const;
  /// Scales every gradient so the global norm is at most `max_norm`; returns
  /// the norm before clipping.
  double clip_grad_norm(double max_norm);
  /// Rounds every parameter value to the nearest 32-bit float.
  void round_to_float();

 private:
  std::vector<Entry> entries_;
};

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay. Decay multiplies the parameter by
/// (1 - lr * weight_decay) before the bias-corrected moment update.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  /// Applies one update to every parameter of `params` using its current
  /// gradient. Throws NumericError naming the parameter if a gradient holds
  /// NaN or Inf. Parameters without gradient storage count as zero gradient.
  void step(ParameterSet& params);

  const AdamWConfig& config() const noexcept { return cfg_; }
  AdamWConfig& config() noexcept { return cfg_; }
  std::int64_t steps() const noexcept { return t_; }

 private:
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace slotgen::num

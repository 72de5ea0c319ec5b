// SPDX-License-Identifier: Apache-2.0
#include "slotgen/num/optim.hpp"

#include <cmath>

#include "slotgen/errors.hpp"

namespace slotgen::num {

Var ParameterSet::add(const std::string& name, Tensor init) {
  if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
  Var v(std::move(init), /*requires_grad=*/true);
  entries_.push_back({name, v});
  return v;
}

Var ParameterSet::add_uniform(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t = Tensor::zeros(fan_in, fan_out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& x : t.values()) x = rng.uniform(-bound, bound);
  return add(name, std::move(t));
}

Var ParameterSet::add_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
  return add(name, Tensor::zeros(rows, cols));
}

const Var& ParameterSet::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.var;
  throw ConfigError("unknown parameter: " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.var.value().size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

double ParameterSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_)
    if (e.var.has_grad())
      for (double g : e.var.grad().values()) sq += g * g;
  return std::sqrt(sq);
}

double ParameterSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& e : entries_)
      if (e.var.has_grad())
        for (auto& g : e.var.node().grad.values()) g *= factor;
  }
  return norm;
}

void ParameterSet::round_to_float() {
  for (auto& e : entries_)
    for (auto& x : e.var.mutable_value().values()) x = static_cast<double>(static_cast<float>(x));
}

void AdamW::step(ParameterSet& params) {
  const auto& entries = params.entries();
  if (m_.empty()) {
    for (const auto& e : entries) {
      m_.emplace_back(e.var.shape(), 0.0);
      v_.emplace_back(e.var.shape(), 0.0);
    }
  }
  if (m_.size() != entries.size()) throw ContractError("AdamW state does not match the parameter set");

  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Var& p = entries[k].var;
    if (!p.has_grad()) continue;
    for (double g : p.grad().values())
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + entries[k].name + "'");
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double decay = 1.0 - cfg_.lr * cfg_.weight_decay;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Var p = entries[k].var;
    auto& w = p.mutable_value();
    if (m_[k].shape() != w.shape()) throw ContractError("AdamW state shape mismatch for " + entries[k].name);
    const bool has = p.has_grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = has ? p.grad()[i] : 0.0;
      w[i] *= decay;
      m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g;
      v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[k][i] / bc1;
      const double vhat = v_[k][i] / bc2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace slotgen::num

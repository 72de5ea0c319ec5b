// SPDX-License-Identifier: Apache-2.0
#include "slotgen/num/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slotgen/errors.hpp"

namespace slotgen::num {

namespace {

[[noreturn]] void shape_error(const char* op, const Var& a, const Var& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

void require_rank2(const char* op, const Var& a) {
  if (a.shape().size() != 2)
    throw DimensionError(std::string(op) + ": expected rank-2 operand, got " + shape_string(a.shape()));
}

/// Gradient buffer of `v`, or nullptr when `v` does not take gradients.
double* grad_ptr(const Var& v) {
  if (!v.requires_grad()) return nullptr;
  v.node().ensure_grad();
  return v.node().grad.data();
}

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[m x k] += G[m x n] * B[k x n]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += gi[j] * bp[j];
      ci[p] += s;
    }
  }
}

// C[k x n] += A[m x k]^T * G[m x n]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * gi[j];
    }
  }
}

inline double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class Fwd, class Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv_from_output) {
  Tensor out = a.value();
  for (auto& v : out.values()) v = fwd(v);
  if (!tracking({&a})) return Var(std::move(out));
  return record(std::move(out), [a, deriv_from_output](Node& self) {
    double* ga = grad_ptr(a);
    if (!ga) return;
    const auto& y = self.value;
    const auto& x = a.value();
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += self.grad[i] * deriv_from_output(x[i], y[i]);
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_error("matmul", a, b);
  Tensor out = Tensor::zeros(m, n);
  gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n);
  if (!tracking({&a, &b})) return Var(std::move(out));
  return record(std::move(out), [a, b, m, k, n](Node& self) {
    if (double* ga = grad_ptr(a)) gemm_nt(self.grad.data(), b.value().data(), ga, m, n, k);
    if (double* gb = grad_ptr(b)) gemm_tn(a.value().data(), self.grad.data(), gb, m, k, n);
  });
}

Var transpose(const Var& a) {
  require_rank2("transpose", a);
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.value().at(i, j);
  if (!tracking({&a})) return Var(std::move(out));
  return record(std::move(out), [a, m, n](Node& self) {
    double* ga = grad_ptr(a);
    if (!ga) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad.at(j, i);
  });
}

namespace {

enum class Binary { kAdd, kSub, kMul };

Var binary(const char* name, Binary kind, const Var& a, const Var& b) {
  require_rank2(name, a);
  require_rank2(name, b);
  const bool same = a.shape() == b.shape();
  const bool bias = !same && kind != Binary::kMul && b.rows() == 1 && b.cols() == a.cols();
  if (!same && !bias) shape_error(name, a, b);
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = a.value();
  const double* bv = b.value().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* oi = out.data() + i * n;
    const double* bi = bias ? bv : bv + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      switch (kind) {
        case Binary::kAdd: oi[j] += bi[j]; break;
        case Binary::kSub: oi[j] -= bi[j]; break;
        case Binary::kMul: oi[j] *= bi[j]; break;
      }
    }
  }
  if (!tracking({&a, &b})) return Var(std::move(out));
  return record(std::move(out), [a, b, kind, bias, m, n](Node& self) {
    const double* g = self.grad.data();
    if (double* ga = grad_ptr(a)) {
      if (kind == Binary::kMul) {
        const double* bv = b.value().data();
        for (std::size_t i = 0; i < m * n; ++i) ga[i] += g[i] * bv[i];
      } else {
        for (std::size_t i = 0; i < m * n; ++i) ga[i] += g[i];
      }
    }
    if (double* gb = grad_ptr(b)) {
      const double sign = kind == Binary::kSub ? -1.0 : 1.0;
      if (kind == Binary::kMul) {
        const double* av = a.value().data();
        for (std::size_t i = 0; i < m * n; ++i) gb[i] += g[i] * av[i];
      } else if (bias) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb[j] += sign * g[i * n + j];
      } else {
        for (std::size_t i = 0; i < m * n; ++i) gb[i] += sign * g[i];
      }
    }
  });
}

}  // namespace

Var add(const Var& a, const Var& b) { return binary("add", Binary::kAdd, a, b); }
Var sub(const Var& a, const Var& b) { return binary("sub", Binary::kSub, a, b); }
Var mul(const Var& a, const Var& b) { return binary("mul", Binary::kMul, a, b); }

Var scale(const Var& a, double factor) {
  return unary(a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Var tanh(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax_values(const Tensor& a, int axis) {
  if (a.rank() != 2) throw DimensionError("softmax: expected rank-2 operand, got " + shape_string(a.shape()));
  if (axis != 0 && axis != 1) throw DimensionError("softmax: axis must be 0 or 1");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = a;
  // Slices are rows for axis 1 and columns for axis 0.
  const std::size_t slices = axis == 1 ? m : n;
  const std::size_t len = axis == 1 ? n : m;
  const std::size_t stride = axis == 1 ? 1 : n;
  for (std::size_t s = 0; s < slices; ++s) {
    double* base = out.data() + (axis == 1 ? s * n : s);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, base[i * stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      base[i * stride] = std::exp(base[i * stride] - mx);
      total += base[i * stride];
    }
    for (std::size_t i = 0; i < len; ++i) base[i * stride] /= total;
  }
  return out;
}

Var softmax(const Var& a, int axis) {
  Tensor out = softmax_values(a.value(), axis);
  if (!tracking({&a})) return Var(std::move(out));
  const std::size_t m = a.rows(), n = a.cols();
  return record(std::move(out), [a, axis, m, n](Node& self) {
    double* ga = grad_ptr(a);
    if (!ga) return;
    const std::size_t slices = axis == 1 ? m : n;
    const std::size_t len = axis == 1 ? n : m;
    const std::size_t stride = axis == 1 ? 1 : n;
    for (std::size_t s = 0; s < slices; ++s) {
      const std::size_t off = axis == 1 ? s * n : s;
      const double* y = self.value.data() + off;
      const double* g = self.grad.data() + off;
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += g[i * stride] * y[i * stride];
      for (std::size_t i = 0; i < len; ++i) ga[off + i * stride] += y[i * stride] * (g[i * stride] - dot);
    }
  });
}

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  Tensor out = Tensor::scalar(total);
  if (!tracking({&a})) return Var(std::move(out));
  return record(std::move(out), [a](Node& self) {
    double* ga = grad_ptr(a);
    if (!ga) return;
    const double g = self.grad[0];
    for (std::size_t i = 0; i < a.value().size(); ++i) ga[i] += g;
  });
}

Var mean_rows(const Var& a) {
  require_rank2("mean_rows", a);
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros(1, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += a.value().at(i, j);
  for (auto& v : out.values()) v /= static_cast<double>(m);
  if (!tracking({&a})) return Var(std::move(out));
  return record(std::move(out), [a, m, n](Node& self) {
    double* ga = grad_ptr(a);
    if (!ga) return;
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j] * inv;
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) shape_error("concat_cols", parts[0], p);
    n += p.cols();
  }
  Tensor out = Tensor::zeros(m, n);
  std::size_t off = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    const std::size_t c = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(p.value().data() + i * c, c, out.data() + i * n + off);
    off += c;
    any_grad = any_grad || tracking({&p});
  }
  if (!any_grad) return Var(std::move(out));
  std::vector<Var> inputs(parts.begin(), parts.end());
  return record(std::move(out), [inputs = std::move(inputs), m, n](Node& self) {
    std::size_t off = 0;
    for (const auto& p : inputs) {
      const std::size_t c = p.cols();
      if (double* gp = grad_ptr(p))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j) gp[i * c + j] += self.grad[i * n + off + j];
      off += c;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    if (p.cols() != n) shape_error("concat_rows", parts[0], p);
    m += p.rows();
  }
  std::vector<double> data;
  data.reserve(m * n);
  bool any_grad = false;
  for (const auto& p : parts) {
    data.insert(data.end(), p.value().values().begin(), p.value().values().end());
    any_grad = any_grad || tracking({&p});
  }
  Tensor out({m, n}, std::move(data));
  if (!any_grad) return Var(std::move(out));
  std::vector<Var> inputs(parts.begin(), parts.end());
  return record(std::move(out), [inputs = std::move(inputs)](Node& self) {
    std::size_t off = 0;
    for (const auto& p : inputs) {
      const std::size_t len = p.value().size();
      if (double* gp = grad_ptr(p))
        for (std::size_t i = 0; i < len; ++i) gp[i] += self.grad[off + i];
      off += len;
    }
  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
  require_rank2("slice_rows", a);
  if (begin >= end || end > a.rows())
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside " + shape_string(a.shape()));
  const std::size_t n = a.cols();
  std::vector<double> data(a.value().data() + begin * n, a.value().data() + end * n);
  Tensor out({end - begin, n}, std::move(data));
  if (!tracking({&a})) return Var(std::move(out));
  return record(std::move(out), [a, begin, n](Node& self) {
    double* ga = grad_ptr(a);
    if (!ga) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[begin * n + i] += self.grad[i];
  });
}

Var row(const Var& a, std::size_t index) { return slice_rows(a, index, index + 1); }

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  require_rank2("slice_cols", a);
  if (begin >= end || end > a.cols())
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside " + shape_string(a.shape()));
  const std::size_t m = a.rows(), n = a.cols(), w = end - begin;
  Tensor out = Tensor::zeros(m, w);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(a.value().data() + i * n + begin, w, out.data() + i * w);
  if (!tracking({&a})) return Var(std::move(out));
  return record(std::move(out), [a, begin, m, n, w](Node& self) {
    double* ga = grad_ptr(a);
    if (!ga) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) ga[i * n + begin + j] += self.grad[i * w + j];
  });
}

Var embedding(const Var& table, std::span<const std::int64_t> ids) {
  require_rank2("embedding", table);
  if (ids.empty()) throw DimensionError("embedding: empty id sequence");
  const std::size_t v = table.rows(), d = table.cols();
  Tensor out = Tensor::zeros(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v)
      throw DimensionError("embedding: id " + std::to_string(ids[i]) + " outside table " +
                           shape_string(table.shape()));
    std::copy_n(table.value().data() + ids[i] * d, d, out.data() + i * d);
  }
  if (!tracking({&table})) return Var(std::move(out));
  std::vector<std::int64_t> kept(ids.begin(), ids.end());
  return record(std::move(out), [table, kept = std::move(kept), d](Node& self) {
    double* gt = grad_ptr(table);
    if (!gt) return;
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) gt[kept[i] * d + j] += self.grad[i * d + j];
  });
}

Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps) {
  require_rank2("layer_norm", a);
  const std::size_t m = a.rows(), n = a.cols();
  if (gain.rows() != 1 || gain.cols() != n) shape_error("layer_norm", a, gain);
  if (bias.rows() != 1 || bias.cols() != n) shape_error("layer_norm", a, bias);
  Tensor xhat = Tensor::zeros(m, n);
  std::vector<double> inv_std(m);
  Tensor out = Tensor::zeros(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = a.value().data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += x[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat.at(i, j) = (x[j] - mean) * inv_std[i];
      out.at(i, j) = xhat.at(i, j) * gain.value()[j] + bias.value()[j];
    }
  }
  if (!tracking({&a, &gain, &bias})) return Var(std::move(out));
  return record(std::move(out), [a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), m,
                                 n](Node& self) {
    double* ga = grad_ptr(a);
    double* gg = grad_ptr(gain);
    double* gb = grad_ptr(bias);
    std::vector<double> dxhat(n);
    for (std::size_t i = 0; i < m; ++i) {
      const double* g = self.grad.data() + i * n;
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (gg) gg[j] += g[j] * xhat.at(i, j);
        if (gb) gb[j] += g[j];
        dxhat[j] = g[j] * gain.value()[j];
        s1 += dxhat[j];
        s2 += dxhat[j] * xhat.at(i, j);
      }
      if (!ga) continue;
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j)
        ga[i * n + j] += inv_std[i] * (dxhat[j] - inv_n * s1 - xhat.at(i, j) * inv_n * s2);
    }
  });
}

Var dropout(const Var& a, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw InputError("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(a.shape(), 0.0);
  for (auto& v : mask.values()) v = rng.uniform() < rate ? 0.0 : keep_scale;
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  if (!tracking({&a})) return Var(std::move(out));
  return record(std::move(out), [a, mask = std::move(mask)](Node& self) {
    double* ga = grad_ptr(a);
    if (!ga) return;
    for (std::size_t i = 0; i < mask.size(); ++i) ga[i] += self.grad[i] * mask[i];
  });
}

Var cross_entropy(const Var& logits, std::size_t target) {
  require_rank2("cross_entropy", logits);
  if (logits.rows() != 1) throw DimensionError("cross_entropy: expected 1 x V logits, got " +
                                               shape_string(logits.shape()));
  const std::size_t v = logits.cols();
  if (target >= v) throw DimensionError("cross_entropy: target " + std::to_string(target) + " outside " +
                                        shape_string(logits.shape()));
  Tensor probs = softmax_values(logits.value(), 1);
  // log-sum-exp form stays finite when probs[target] underflows.
  const double* x = logits.value().data();
  const double mx = *std::max_element(x, x + v);
  double total = 0.0;
  for (std::size_t i = 0; i < v; ++i) total += std::exp(x[i] - mx);
  Tensor out = Tensor::scalar(-(x[target] - mx - std::log(total)));
  if (!tracking({&logits})) return Var(std::move(out));
  return record(std::move(out), [logits, probs = std::move(probs), target](Node& self) {
    double* gl = grad_ptr(logits);
    if (!gl) return;
    const double g = self.grad[0];
    for (std::size_t i = 0; i < probs.size(); ++i) gl[i] += g * (probs[i] - (i == target ? 1.0 : 0.0));
  });
}

Var cross_entropy_rows(const Var& logits, std::span<const std::size_t> targets) {
  require_rank2("cross_entropy_rows", logits);
  const std::size_t n = logits.rows(), v = logits.cols();
  if (targets.size() != n)
    throw DimensionError("cross_entropy_rows: " + std::to_string(targets.size()) + " targets for " +
                         shape_string(logits.shape()));
  Tensor probs = softmax_values(logits.value(), 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= v)
      throw DimensionError("cross_entropy_rows: target " + std::to_string(targets[i]) + " outside " +
                           shape_string(logits.shape()));
    const double* x = logits.value().data() + i * v;
    const double mx = *std::max_element(x, x + v);
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) z += std::exp(x[j] - mx);
    total -= x[targets[i]] - mx - std::log(z);
  }
  Tensor out = Tensor::scalar(total);
  if (!tracking({&logits})) return Var(std::move(out));
  std::vector<std::size_t> t(targets.begin(), targets.end());
  return record(std::move(out), [logits, probs = std::move(probs), t = std::move(t), v](Node& self) {
    double* gl = grad_ptr(logits);
    if (!gl) return;
    const double g = self.grad[0];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double* pr = probs.data() + i * v;
      double* gi = gl + i * v;
      for (std::size_t j = 0; j < v; ++j) gi[j] += g * pr[j];
      gi[t[i]] -= g;
    }
  });
}

Var gru_step(const Var& input_proj, const Var& h_prev, const Var& recur) {
  require_rank2("gru_step", input_proj);
  require_rank2("gru_step", h_prev);
  require_rank2("gru_step", recur);
  const std::size_t m = h_prev.rows(), d = h_prev.cols();
  if (input_proj.rows() != m || input_proj.cols() != 3 * d) shape_error("gru_step", input_proj, h_prev);
  if (recur.rows() != d || recur.cols() != 3 * d) shape_error("gru_step", h_prev, recur);

  const double* p = input_proj.value().data();
  const double* h = h_prev.value().data();
  const double* u = recur.value().data();
  const std::size_t w = 3 * d;

  Tensor z = Tensor::zeros(m, d), r = Tensor::zeros(m, d), c = Tensor::zeros(m, d), rh = Tensor::zeros(m, d);
  Tensor out = Tensor::zeros(m, d);
  std::vector<double> acc(w);
  for (std::size_t i = 0; i < m; ++i) {
    const double* hi = h + i * d;
    const double* pi = p + i * w;
    // Gate pre-activations from the recurrent state: columns [0, 2d) of h U.
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      const double hv = hi[k];
      if (hv == 0.0) continue;
      const double* uk = u + k * w;
      for (std::size_t j = 0; j < 2 * d; ++j) acc[j] += hv * uk[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      z.at(i, j) = sigmoid_scalar(pi[j] + acc[j]);
      r.at(i, j) = sigmoid_scalar(pi[d + j] + acc[d + j]);
      rh.at(i, j) = r.at(i, j) * hi[j];
    }
    for (std::size_t k = 0; k < d; ++k) {
      const double v = rh.at(i, k);
      if (v == 0.0) continue;
      const double* uk = u + k * w + 2 * d;
      for (std::size_t j = 0; j < d; ++j) acc[2 * d + j] += v * uk[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      c.at(i, j) = std::tanh(pi[2 * d + j] + acc[2 * d + j]);
      out.at(i, j) = (1.0 - z.at(i, j)) * hi[j] + z.at(i, j) * c.at(i, j);
    }
  }
  if (!tracking({&input_proj, &h_prev, &recur})) return Var(std::move(out));

  return record(std::move(out), [input_proj, h_prev, recur, z = std::move(z), r = std::move(r), c = std::move(c),
                                 rh = std::move(rh), m, d](Node& self) {
    const std::size_t w = 3 * d;
    double* gp = grad_ptr(input_proj);
    double* gh = grad_ptr(h_prev);
    double* gu = grad_ptr(recur);
    const double* h = h_prev.value().data();
    const double* u = recur.value().data();
    std::vector<double> da(w), drh(d);
    for (std::size_t i = 0; i < m; ++i) {
      const double* g = self.grad.data() + i * d;
      const double* hi = h + i * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double zj = z.at(i, j), cj = c.at(i, j);
        da[j] = g[j] * (cj - hi[j]) * zj * (1.0 - zj);   // update gate
        da[2 * d + j] = g[j] * zj * (1.0 - cj * cj);     // candidate
      }
      // d(r*h) = da_h Uh^T
      for (std::size_t k = 0; k < d; ++k) {
        const double* uk = u + k * w + 2 * d;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += da[2 * d + j] * uk[j];
        drh[k] = s;
      }
      for (std::size_t j = 0; j < d; ++j) {
        const double rj = r.at(i, j);
        da[d + j] = drh[j] * hi[j] * rj * (1.0 - rj);  // reset gate
      }
      if (gp)
        for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += da[j];
      if (gu) {
        for (std::size_t k = 0; k < d; ++k) {
          double* guk = gu + k * w;
          const double hv = hi[k];
          const double rv = rh.at(i, k);
          for (std::size_t j = 0; j < 2 * d; ++j) guk[j] += hv * da[j];
          for (std::size_t j = 0; j < d; ++j) guk[2 * d + j] += rv * da[2 * d + j];
        }
      }
      if (gh) {
        double* ghi = gh + i * d;
        for (std::size_t k = 0; k < d; ++k) {
          const double* uk = u + k * w;
          double s = g[k] * (1.0 - z.at(i, k)) + drh[k] * r.at(i, k);
          for (std::size_t j = 0; j < 2 * d; ++j) s += da[j] * uk[j];
          ghi[k] += s;
        }
      }
    }
  });
}

}  // namespace slotgen::num

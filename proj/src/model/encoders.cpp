// SPDX-License-Identifier: Apache-2.0
#include "slotgen/model/encoders.hpp"

#include <cmath>

#include "slotgen/errors.hpp"

namespace slotgen::model {

namespace {
bool is_empty(const Var& v) { return !v || v.value().empty(); }
}  // namespace

GruParams make_gru(num::ParameterSet& params, const std::string& prefix, std::size_t d_in, std::size_t d_h,
                   num::Rng& rng) {
  return {params.add_uniform(prefix + ".input", d_in, 3 * d_h, rng),
          params.add_uniform(prefix + ".recur", d_h, 3 * d_h, rng), params.add_zeros(prefix + ".bias", 1, 3 * d_h)};
}

Var gru_cell(const Var& x, const Var& h_prev, const GruParams& p) {
  if (x.rows() != 1 || x.cols() != p.input_dim() || h_prev.rows() != 1 || h_prev.cols() != p.hidden_dim())
    throw DimensionError("gru_cell: input " + num::shape_string(x.shape()) + " and state " +
                         num::shape_string(h_prev.shape()) + " do not fit a GRU of input " +
                         std::to_string(p.input_dim()) + " and hidden " + std::to_string(p.hidden_dim()));
  return num::gru_step(num::add(num::matmul(x, p.input), p.bias), h_prev, p.recur);
}

Var gru_sequence(const Var& inputs, const GruParams& p, bool backward) {
  if (is_empty(inputs)) throw InputError("gru_sequence: empty input");
  const std::size_t T = inputs.rows();
  if (inputs.cols() != p.input_dim())
    throw DimensionError("gru_sequence: inputs " + num::shape_string(inputs.shape()) + " for GRU input " +
                         std::to_string(p.input_dim()));
  Var proj = num::add(num::matmul(inputs, p.input), p.bias);
  Var h(Tensor::zeros(1, p.hidden_dim()));
  std::vector<Var> states(T);
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = backward ? T - 1 - k : k;
    h = num::gru_step(num::row(proj, t), h, p.recur);
    states[t] = h;
  }
  return num::concat_rows(states);
}

UtteranceEncoding encode_utterance(const Var& embeds, const GruParams& fwd, const GruParams& bwd) {
  if (is_empty(embeds)) throw InputError("encode_utterance: empty utterance");
  const std::size_t T = embeds.rows();
  Var f = gru_sequence(embeds, fwd, false);
  Var b = gru_sequence(embeds, bwd, true);
  std::vector<Var> both{f, b};
  std::vector<Var> ends{num::row(f, T - 1), num::row(b, 0)};
  return {num::concat_cols(both), num::concat_cols(ends)};
}

AttentionResult self_attention(const Var& h, double dropout_rate, bool training, num::Rng* rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(h.cols()));
  Var weights = num::softmax(num::scale(num::matmul(h, num::transpose(h)), scale), 1);
  Var out = num::matmul(weights, h);
  if (training && dropout_rate > 0.0) {
    if (!rng) throw ContractError("self_attention: dropout in training needs a random source");
    out = num::dropout(out, dropout_rate, true, *rng);
  }
  return {weights, out};
}

Var encode_images(const Tensor& features, const Var& weight, const Var& bias) {
  const std::size_t k = features.empty() ? 0 : features.rows();
  if (k > kMaxImages)
    throw InputError("a turn carries at most " + std::to_string(kMaxImages) + " images, got " + std::to_string(k));
  const std::size_t d_img = weight.rows() / kMaxImages;
  if (weight.rows() != kMaxImages * d_img || (k && features.cols() != d_img))
    throw DimensionError("encode_images: features " + (k ? num::shape_string(features.shape()) : "[0]") +
                         " for weight " + num::shape_string(weight.shape()));
  Tensor flat = Tensor::zeros(1, kMaxImages * d_img);
  for (std::size_t i = 0; i < k * d_img; ++i) flat[i] = features[i];
  return num::relu(num::add(num::matmul(Var(std::move(flat)), weight), bias));
}

Var encode_context(const std::vector<Var>& turn_inputs, const GruParams& p) {
  if (turn_inputs.empty()) throw InputError("encode_context: no turns");
  return gru_sequence(num::concat_rows(turn_inputs), p);
}

KBEncoding empty_kb(std::size_t d_h) {
  KBEncoding e;
  e.query_final = Var(Tensor::zeros(1, d_h));
  e.entity_final = Var(Tensor::zeros(1, d_h));
  e.joint = Var(Tensor::zeros(1, 2 * d_h));
  e.weights = Var(Tensor(num::Shape{2, 2}, 0.5));
  e.attended = Var(Tensor::zeros(1, 2 * d_h));
  return e;
}

KBEncoding encode_kb(const Var& query_embeds, const Var& entity_embeds, const GruParams& q_gru,
                     const GruParams& e_gru) {
  if (is_empty(query_embeds) || is_empty(entity_embeds)) return empty_kb(q_gru.hidden_dim());
  KBEncoding e;
  Var q = gru_sequence(query_embeds, q_gru);
  Var ent = gru_sequence(entity_embeds, e_gru);
  e.query_final = num::row(q, q.rows() - 1);
  e.entity_final = num::row(ent, ent.rows() - 1);
  std::vector<Var> pair{e.query_final, e.entity_final};
  e.joint = num::concat_cols(pair);
  auto att = self_attention(num::concat_rows(pair));
  e.weights = att.weights;
  std::vector<Var> rows{num::row(att.output, 0), num::row(att.output, 1)};
  e.attended = num::concat_cols(rows);
  return e;
}

TransformerBlockParams make_transformer_block(num::ParameterSet& params, const std::string& prefix, std::size_t d,
                                              std::size_t heads, num::Rng& rng) {
  if (heads == 0 || d % heads != 0)
    throw ConfigError("transformer dimension " + std::to_string(d) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  TransformerBlockParams p;
  p.heads = heads;
  p.wq = params.add_uniform(prefix + ".wq", d, d, rng);
  p.wk = params.add_uniform(prefix + ".wk", d, d, rng);
  p.wv = params.add_uniform(prefix + ".wv", d, d, rng);
  p.wo = params.add_uniform(prefix + ".wo", d, d, rng);
  p.ln1_gain = params.add(prefix + ".ln1.gain", Tensor({1, d}, 1.0));
  p.ln1_bias = params.add_zeros(prefix + ".ln1.bias", 1, d);
  p.ln2_gain = params.add(prefix + ".ln2.gain", Tensor({1, d}, 1.0));
  p.ln2_bias = params.add_zeros(prefix + ".ln2.bias", 1, d);
  p.ff1 = params.add_uniform(prefix + ".ff1", d, 4 * d, rng);
  p.ff1_bias = params.add_zeros(prefix + ".ff1.bias", 1, 4 * d);
  p.ff2 = params.add_uniform(prefix + ".ff2", 4 * d, d, rng);
  p.ff2_bias = params.add_zeros(prefix + ".ff2.bias", 1, d);
  return p;
}

Var transformer_block(const Var& h, const TransformerBlockParams& p, std::vector<Tensor>* head_weights) {
  const std::size_t d = p.dim();
  if (p.heads == 0 || d % p.heads != 0)
    throw ConfigError("transformer dimension " + std::to_string(d) + " is not divisible by " +
                      std::to_string(p.heads) + " heads");
  if (h.cols() != d) throw DimensionError("transformer_block: input " + num::shape_string(h.shape()) +
                                          " for model dimension " + std::to_string(d));
  const std::size_t dk = d / p.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Var x = num::layer_norm(h, p.ln1_gain, p.ln1_bias);
  Var q = num::matmul(x, p.wq), k = num::matmul(x, p.wk), v = num::matmul(x, p.wv);
  std::vector<Var> heads;
  heads.reserve(p.heads);
  for (std::size_t i = 0; i < p.heads; ++i) {
    Var qi = num::slice_cols(q, i * dk, (i + 1) * dk);
    Var ki = num::slice_cols(k, i * dk, (i + 1) * dk);
    Var vi = num::slice_cols(v, i * dk, (i + 1) * dk);
    Var w = num::softmax(num::scale(num::matmul(qi, num::transpose(ki)), scale), 1);
    if (head_weights) head_weights->push_back(w.value());
    heads.push_back(num::matmul(w, vi));
  }
  Var attended = num::add(h, num::matmul(num::concat_cols(heads), p.wo));

  Var y = num::layer_norm(attended, p.ln2_gain, p.ln2_bias);
  Var ff = num::add(num::matmul(num::relu(num::add(num::matmul(y, p.ff1), p.ff1_bias)), p.ff2), p.ff2_bias);
  return num::add(attended, ff);
}

Tensor sinusoidal_positions(std::size_t length, std::size_t dim) {
  Tensor pe = Tensor::zeros(length, dim);
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(dim));
      const double angle = static_cast<double>(t) * freq;
      pe.at(t, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

}  // namespace slotgen::model

// SPDX-License-Identifier: Apache-2.0
#include "slotgen/model/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "slotgen/errors.hpp"

namespace slotgen::model {

DecoderParams make_decoder(num::ParameterSet& params, const Var& embed, std::size_t d_h, num::Rng& rng) {
  DecoderParams p;
  p.embed = embed;
  const std::size_t d_w = embed.cols(), vocab = embed.rows();
  p.gru = make_gru(params, "dec.gru", d_w + d_h + 2 * d_h, d_h, rng);
  p.attn = params.add_uniform("dec.attn", d_h, d_h, rng);
  p.combine = params.add_uniform("dec.combine", 2 * d_h, d_h, rng);
  p.output = params.add_uniform("dec.output", d_h, vocab, rng);
  return p;
}

DecoderState initial_state(const Var& hidden) {
  return {hidden, Var(Tensor::zeros(1, hidden.cols())), 0};
}

LuongResult luong_attention_keys(const Var& query, const Var& keys, const Var& context_states) {
  if (keys.rows() == 0 || keys.cols() != query.cols() || keys.rows() != context_states.rows())
    throw DimensionError("luong_attention: query " + num::shape_string(query.shape()) + " against keys " +
                         num::shape_string(keys.shape()));
  Var alphas = num::softmax(num::matmul(query, num::transpose(keys)), 1);
  return {alphas, num::matmul(alphas, context_states)};
}

LuongResult luong_attention(const Var& query, const Var& context_states, const Var& attn_weight) {
  return luong_attention_keys(query, num::matmul(context_states, attn_weight), context_states);
}

DecoderContext::DecoderContext(const Var& context_states, const Var& kb, const DecoderParams& p)
    : states(context_states), keys(num::matmul(context_states, p.attn)), kb_attended(kb) {
  if (!kb_attended) kb_attended = Var(Tensor::zeros(1, 2 * p.hidden_dim()));
  if (kb_attended.rows() != 1 || kb_attended.cols() != 2 * p.hidden_dim())
    throw DimensionError("decoder: knowledge-base vector " + num::shape_string(kb_attended.shape()) +
                         " for hidden size " + std::to_string(p.hidden_dim()));
}

StepResult decoder_step(TokenId y_prev, const DecoderState& state, const DecoderContext& ctx, const DecoderParams& p) {
  if (y_prev < 0 || static_cast<std::size_t>(y_prev) >= p.embed.rows())
    throw InputError("decoder: token id " + std::to_string(y_prev) + " outside vocabulary of " +
                     std::to_string(p.embed.rows()));
  const std::int64_t id = y_prev;
  std::vector<Var> parts{num::embedding(p.embed, std::span<const std::int64_t>(&id, 1)), state.input_feed,
                         ctx.kb_attended};
  Var hidden = gru_cell(num::concat_cols(parts), state.hidden, p.gru);
  auto att = luong_attention_keys(hidden, ctx.keys, ctx.states);
  std::vector<Var> hc{hidden, att.context};
  Var attentional = num::tanh(num::matmul(num::concat_cols(hc), p.combine));
  return {attentional, att.alphas, {hidden, attentional, state.step + 1}};
}

std::pair<Tensor, DecoderState> decode_step(TokenId y_prev, const DecoderState& state, const DecoderContext& ctx,
                                            const DecoderParams& p) {
  auto r = decoder_step(y_prev, state, ctx, p);
  return {num::softmax_values(num::matmul(r.attentional, p.output).value(), 1), r.state};
}

NllSum response_nll(std::span<const TokenId> response, const DecoderState& init, const DecoderContext& ctx,
                    const DecoderParams& p) {
  std::vector<TokenId> content;
  for (TokenId t : response)
    if (t != text::kPad) content.push_back(t);
  std::vector<std::size_t> targets;
  targets.reserve(content.size() + 1);
  for (TokenId t : content) targets.push_back(static_cast<std::size_t>(t));
  targets.push_back(static_cast<std::size_t>(text::kEos));

  std::vector<Var> rows;
  rows.reserve(targets.size());
  DecoderState state = init;
  TokenId prev = text::kBos;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto r = decoder_step(prev, state, ctx, p);
    rows.push_back(r.attentional);
    state = r.state;
    prev = i < content.size() ? content[i] : text::kEos;
  }
  Var logits = num::matmul(num::concat_rows(rows), p.output);
  return {num::cross_entropy_rows(logits, targets), targets.size()};
}

// ---- search -------------------------------------------------------------------

void GenerationConfig::validate() const {
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  if (beam_width < 1) throw ConfigError("beam width must be >= 1");
  if (!(length_alpha >= 0.0 && length_alpha <= 1.0)) throw ConfigError("length_alpha must be in [0, 1]");
}

double hypothesis_score(const Hypothesis& h, double alpha) {
  const double len = static_cast<double>(std::max<std::size_t>(h.length(), 1));
  return h.log_prob / std::pow(len, alpha);
}

namespace {
std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

bool is_finished(const Hypothesis& h, const GenerationConfig& cfg) {
  return h.tokens.back() == text::kEos || h.length() >= cfg.max_len;
}
}  // namespace

Hypothesis greedy_search(const SequenceScorer& scorer, const GenerationConfig& cfg) {
  cfg.validate();
  Hypothesis h{{text::kBos}, 0.0, false};
  auto state = scorer.initial();
  while (!h.finished) {
    auto [logp, next] = scorer.advance(state, h.tokens.back());
    const std::size_t best = argmax_lowest(logp);
    h.tokens.push_back(static_cast<TokenId>(best));
    h.log_prob += logp[best];
    h.finished = is_finished(h, cfg);
    state = std::move(next);
  }
  return h;
}

Hypothesis beam_search(const SequenceScorer& scorer, const GenerationConfig& cfg) {
  cfg.validate();
  std::vector<Hypothesis> pool{greedy_search(scorer, cfg)};
  if (cfg.beam_width == 1) return pool.front();

  struct Alive {
    Hypothesis hyp;
    SequenceScorer::StatePtr state;
  };
  std::vector<Alive> alive{{Hypothesis{{text::kBos}, 0.0, false}, scorer.initial()}};
  while (!alive.empty()) {
    // (log_prob, parent, token)
    std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
    std::vector<SequenceScorer::StatePtr> next_states(alive.size());
    for (std::size_t a = 0; a < alive.size(); ++a) {
      auto [logp, next] = scorer.advance(alive[a].state, alive[a].hyp.tokens.back());
      next_states[a] = std::move(next);
      for (std::size_t v = 0; v < logp.size(); ++v) cand.emplace_back(alive[a].hyp.log_prob + logp[v], a, v);
    }
    const std::size_t keep = std::min(cfg.beam_width, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(keep), cand.end(), [](const auto& x, const auto& y) {
      if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
      if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
      return std::get<2>(x) < std::get<2>(y);
    });
    std::vector<Alive> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const auto& [lp, parent, token] = cand[i];
      Alive child{alive[parent].hyp, next_states[parent]};
      child.hyp.tokens.push_back(static_cast<TokenId>(token));
      child.hyp.log_prob = lp;
      child.hyp.finished = is_finished(child.hyp, cfg);
      if (child.hyp.finished)
        pool.push_back(std::move(child.hyp));
      else
        next.push_back(std::move(child));
    }
    alive = std::move(next);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i)
    if (hypothesis_score(pool[i], cfg.length_alpha) > hypothesis_score(pool[best], cfg.length_alpha)) best = i;
  return pool[best];
}

std::vector<TokenId> strip_framing(const Hypothesis& h) {
  std::vector<TokenId> out;
  for (std::size_t i = 1; i < h.tokens.size(); ++i) {
    if (h.tokens[i] == text::kEos) break;
    out.push_back(h.tokens[i]);
  }
  return out;
}

namespace {
struct NeuralState final : SequenceScorer::State {
  DecoderState dec;
};

std::vector<double> log_softmax_row(const Tensor& logits) {
  const double* x = logits.data();
  const std::size_t n = logits.size();
  const double mx = *std::max_element(x, x + n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(x[i] - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - lz;
  return out;
}
}  // namespace

DecoderScorer::DecoderScorer(const DecoderParams& p, DecoderContext ctx, const Var& init_hidden)
    : p_(p), ctx_(std::move(ctx)), init_(init_hidden) {}

SequenceScorer::StatePtr DecoderScorer::initial() const {
  auto s = std::make_shared<NeuralState>();
  s->dec = initial_state(init_);
  return s;
}

std::pair<std::vector<double>, SequenceScorer::StatePtr> DecoderScorer::advance(const StatePtr& state,
                                                                                 TokenId token) const {
  const auto& cur = static_cast<const NeuralState&>(*state);
  auto r = decoder_step(token, cur.dec, ctx_, p_);
  auto next = std::make_shared<NeuralState>();
  next->dec = r.state;
  return {log_softmax_row(num::matmul(r.attentional, p_.output).value()), next};
}

}  // namespace slotgen::model

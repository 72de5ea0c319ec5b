// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <vector>

#include "slotgen/model/encoders.hpp"
#include "slotgen/text/vocab.hpp"

namespace slotgen::model {

using text::TokenId;

struct DecoderParams {
  Var embed;      // V x d_w, shared with the trainable encoder embeddings
  GruParams gru;  // input d_w + d_h + 2d_h
  Var attn;       // d_h x d_h, bilinear attention score
  Var combine;    // 2d_h x d_h
  Var output;     // d_h x V

  std::size_t hidden_dim() const { return gru.hidden_dim(); }
  std::size_t vocab_size() const { return output.cols(); }
};

DecoderParams make_decoder(num::ParameterSet& params, const Var& embed, std::size_t d_h, num::Rng& rng);

struct DecoderState {
  Var hidden;      // 1 x d_h
  Var input_feed;  // 1 x d_h, previous attentional vector; zero at step 0
  std::size_t step = 0;
};

DecoderState initial_state(const Var& hidden);

struct LuongResult {
  Var alphas;   // 1 x N
  Var context;  // 1 x d_h
};

/// alphas = softmax_m(ctx_m W_f q^T); context = sum_m alphas_m ctx_m.
LuongResult luong_attention(const Var& query, const Var& context_states, const Var& attn_weight);
/// Same with the keys ctx W_f precomputed.
LuongResult luong_attention_keys(const Var& query, const Var& keys, const Var& context_states);

/// Everything the decoder conditions on for one response.
struct DecoderContext {
  Var states;       // N x d_h context states
  Var keys;         // states W_f
  Var kb_attended;  // 1 x 2d_h, zero when absent

  DecoderContext(const Var& context_states, const Var& kb, const DecoderParams& p);
};

struct StepResult {
  Var attentional;  // h~, 1 x d_h
  Var alphas;       // 1 x N
  DecoderState state;
};

/// GRU input [embed(y_prev); input_feed; kb]; then attention and
/// h~ = tanh([hidden; c] W_combine). Throws InputError for an invalid id.
StepResult decoder_step(TokenId y_prev, const DecoderState& state, const DecoderContext& ctx, const DecoderParams& p);

/// Distribution over the vocabulary (1 x V) and the next state.
std::pair<Tensor, DecoderState> decode_step(TokenId y_prev, const DecoderState& state, const DecoderContext& ctx,
                                            const DecoderParams& p);

struct NllSum {
  Var total;              // summed -log p over counted targets
  std::size_t count = 0;  // number of non-PAD targets
};

/// Teacher-forced negative log-likelihood of `response` framed as BOS ... EOS.
/// PAD ids in `response` are skipped.
NllSum response_nll(std::span<const TokenId> response, const DecoderState& init, const DecoderContext& ctx,
                    const DecoderParams& p);

// ---- search -------------------------------------------------------------------

struct GenerationConfig {
  std::size_t max_len = 20;
  std::size_t beam_width = 1;
  double length_alpha = 0.7;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Step-wise next-token scorer driving greedy and beam search.
class SequenceScorer {
 public:
  struct State {
    virtual ~State() = default;
  };
  using StatePtr = std::shared_ptr<const State>;

  virtual ~SequenceScorer() = default;
  virtual StatePtr initial() const = 0;
  /// Consumes `token` from `state`; returns log-probabilities of the next token and the new state.
  virtual std::pair<std::vector<double>, StatePtr> advance(const StatePtr& state, TokenId token) const = 0;
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // starts with BOS
  double log_prob = 0.0;
  bool finished = false;

  /// Generated tokens, EOS included.
  std::size_t length() const { return tokens.size() - 1; }
};

/// log_prob / length^alpha.
double hypothesis_score(const Hypothesis& h, double alpha);

/// Argmax decoding with ties to the lowest id; returns the full hypothesis.
Hypothesis greedy_search(const SequenceScorer& scorer, const GenerationConfig& cfg);
/// Beam search with length normalisation. Finished hypotheses are retired
/// to a pool that also holds the greedy hypothesis; the best pooled one wins.
Hypothesis beam_search(const SequenceScorer& scorer, const GenerationConfig& cfg);

/// Content tokens of a hypothesis: BOS and EOS removed.
std::vector<TokenId> strip_framing(const Hypothesis& h);

/// Scorer over the neural decoder.
class DecoderScorer final : public SequenceScorer {
 public:
  DecoderScorer(const DecoderParams& p, DecoderContext ctx, const Var& init_hidden);
  StatePtr initial() const override;
  std::pair<std::vector<double>, StatePtr> advance(const StatePtr& state, TokenId token) const override;

 private:
  const DecoderParams& p_;
  DecoderContext ctx_;
  Var init_;
};

}  // namespace slotgen::model

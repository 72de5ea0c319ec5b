// SPDX-License-Identifier: Apache-2.0
//
// Small decoders and table-driven scorers with an exhaustive search oracle.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "slotgen/model/decoder.hpp"
#include "support/gradcheck.hpp"

namespace slotgen::testing {

using model::DecoderContext;
using model::DecoderParams;
using model::GenerationConfig;
using model::Hypothesis;
using model::SequenceScorer;
using num::ParameterSet;
using num::Rng;
using num::Tensor;
using num::Var;
using text::TokenId;

struct Toy {
  ParameterSet ps;
  DecoderParams p;

  Toy(std::size_t vocab, std::size_t d_w, std::size_t d_h, std::uint64_t seed) {
    Rng rng(seed);
    Var embed = ps.add("embed", random_tensor(vocab, d_w, rng, -0.5, 0.5));
    p = model::make_decoder(ps, embed, d_h, rng);
  }
};

inline DecoderContext random_context(const Toy& t, Rng& rng, bool with_kb = true) {
  const std::size_t n = 1 + rng.below(4);
  const std::size_t d_h = t.p.hidden_dim();
  Var kb = with_kb ? Var(random_tensor(1, 2 * d_h, rng)) : Var();
  return DecoderContext(Var(random_tensor(n, d_h, rng)), kb, t.p);
}

inline double row_sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s;
}

/// Table-driven scorer: next-token log-probabilities depend only on the last token.
class TableScorer final : public SequenceScorer {
 public:
  explicit TableScorer(std::vector<std::vector<double>> probs) : probs_(std::move(probs)) {}
  StatePtr initial() const override { return std::make_shared<State>(); }
  std::pair<std::vector<double>, StatePtr> advance(const StatePtr& s, TokenId token) const override {
    const auto& p = probs_.at(static_cast<std::size_t>(token));
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::log(p[i]);
    return {out, s};
  }

 private:
  std::vector<std::vector<double>> probs_;
};

/// Exhaustive search over every sequence the search contract allows: stop at
/// EOS or at max_len tokens, then rank by length-normalised log-probability.
inline Hypothesis enumerate_best(const SequenceScorer& scorer, const GenerationConfig& cfg) {
  Hypothesis best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::function<void(Hypothesis, SequenceScorer::StatePtr)> walk = [&](Hypothesis h, SequenceScorer::StatePtr s) {
    auto [logp, next] = scorer.advance(s, h.tokens.back());
    for (std::size_t v = 0; v < logp.size(); ++v) {
      Hypothesis c = h;
      c.tokens.push_back(static_cast<TokenId>(v));
      c.log_prob += logp[v];
      if (static_cast<TokenId>(v) == text::kEos || c.length() >= cfg.max_len) {
        c.finished = true;
        const double sc = model::hypothesis_score(c, cfg.length_alpha);
        if (sc > best_score) {
          best_score = sc;
          best = c;
        }
      } else {
        walk(c, next);
      }
    }
  };
  walk(Hypothesis{{text::kBos}, 0.0, false}, scorer.initial());
  return best;
}

// Ids 4, 5, 6 are the three content tokens; the reserved ids get negligible mass.
inline std::vector<std::vector<double>> toy_transitions() {
  const double eps = 1e-9;
  auto dist = [&](double a, double b, double c) { return std::vector<double>{eps, eps, eps, eps, a, b, c}; };
  std::vector<std::vector<double>> t(7, dist(1.0 / 3, 1.0 / 3, 1.0 / 3));
  t[text::kBos] = dist(0.5, 0.4, 0.1);
  t[4] = dist(1.0 / 3, 1.0 / 3, 1.0 / 3);
  t[5] = dist(0.9, 0.05, 0.05);
  t[6] = dist(0.2, 0.2, 0.6);
  return t;
}

}  // namespace slotgen::testing

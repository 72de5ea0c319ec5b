// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "doctest.h"
#include "slotgen/errors.hpp"
#include "slotgen/model/decoder.hpp"
#include "support/decoder_toys.hpp"
#include "support/gradcheck.hpp"

using namespace slotgen;
using namespace slotgen::model;
using num::ParameterSet;
using num::Rng;
using slotgen::testing::grad_check;
using slotgen::testing::random_tensor;
using namespace slotgen::testing;

TEST_SUITE("decoder") {

TEST_CASE("luong attention hand cases") {
  Var w(Tensor::matrix({{1.0}}));
  auto single = luong_attention(Var(Tensor::matrix({{0.7}})), Var(Tensor::matrix({{2.5}})), w);
  CHECK(single.alphas.value()[0] == doctest::Approx(1.0));
  CHECK(single.context.value()[0] == doctest::Approx(2.5));

  auto two = luong_attention(Var(Tensor::matrix({{1.0}})), Var(Tensor::matrix({{std::log(2.0)}, {0.0}})), w);
  CHECK(two.alphas.value()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(two.alphas.value()[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(two.context.value()[0] == doctest::Approx(2.0 / 3.0 * std::log(2.0)).epsilon(1e-14));

  Rng rng(1);
  Var ctx(random_tensor(4, 3, rng));
  auto flat = luong_attention(Var(random_tensor(1, 3, rng)), ctx, Var(Tensor::zeros(3, 3)));
  for (double a : flat.alphas.value().values()) CHECK(a == doctest::Approx(0.25));
}

TEST_CASE("luong attention gradients") {
  Rng rng(2);
  Var q(random_tensor(1, 3, rng), true);
  Var ctx(random_tensor(4, 3, rng), true);
  Var w(random_tensor(3, 3, rng), true);
  auto res = grad_check(
      [&] {
        auto r = luong_attention(q, ctx, w);
        return num::add(num::sum(num::mul(r.context, Var(Tensor::row({0.3, -1.1, 0.8})))),
                        num::sum(num::mul(r.alphas, Var(Tensor::row({1.0, -2.0, 0.5, 0.25})))));
      },
      {q, ctx, w});
  INFO(res.worst);
  CHECK(res.max_rel_error < 1e-6);
}

TEST_CASE("decode step distributions are normalised and finite") {
  Toy t(12, 5, 6, 3);
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto ctx = random_context(t, rng);
    auto state = initial_state(Var(random_tensor(1, 6, rng, -10.0, 10.0)));
    TokenId y = text::kBos;
    for (int step = 0; step < 3; ++step) {
      auto [dist, next] = decode_step(y, state, ctx, t.p);
      CHECK(dist.shape() == num::Shape{1, 12});
      CHECK(row_sum(dist) == doctest::Approx(1.0).epsilon(1e-12));
      for (double v : dist.values()) CHECK((std::isfinite(v) && v >= 0.0));
      y = static_cast<TokenId>(4 + rng.below(8));
      state = next;
    }
  }
}

TEST_CASE("absent knowledge equals an all-zero knowledge vector") {
  Toy t(10, 4, 5, 5);
  Rng rng(6);
  Var states(random_tensor(3, 5, rng));
  DecoderContext none(states, Var(), t.p);
  DecoderContext zeros(states, Var(Tensor::zeros(1, 10)), t.p);
  auto init = initial_state(Var(random_tensor(1, 5, rng)));
  CHECK(decode_step(text::kBos, init, none, t.p).first == decode_step(text::kBos, init, zeros, t.p).first);
  CHECK_THROWS_AS(DecoderContext(states, Var(Tensor::zeros(1, 7)), t.p), DimensionError);
}

TEST_CASE("input feeding changes the next step") {
  Toy t(10, 4, 5, 7);
  Rng rng(8);
  auto ctx = random_context(t, rng);
  auto init = initial_state(Var(random_tensor(1, 5, rng)));
  auto fed = init;
  fed.input_feed = Var(random_tensor(1, 5, rng));
  CHECK(decode_step(5, init, ctx, t.p).first != decode_step(5, fed, ctx, t.p).first);
  auto step = decoder_step(5, init, ctx, t.p);
  CHECK(step.state.input_feed.value() == step.attentional.value());
  CHECK(step.state.step == 1);
  CHECK_THROWS_AS(decoder_step(10, init, ctx, t.p), InputError);
  CHECK_THROWS_AS(decoder_step(-1, init, ctx, t.p), InputError);
}

TEST_CASE("zero output weights give log|V| per target") {
  Toy t(9, 4, 5, 9);
  Var out = t.p.output;
  out.mutable_value().fill(0.0);
  Rng rng(10);
  auto ctx = random_context(t, rng);
  std::vector<TokenId> resp{4, 7, 5};
  auto nll = response_nll(resp, initial_state(Var(random_tensor(1, 5, rng))), ctx, t.p);
  CHECK(nll.count == 4);
  CHECK(nll.total.value()[0] == doctest::Approx(4.0 * std::log(9.0)).epsilon(1e-12));
}

TEST_CASE("padding does not change the loss") {
  Toy t(9, 4, 5, 11);
  Rng rng(12);
  auto ctx = random_context(t, rng);
  auto init = initial_state(Var(random_tensor(1, 5, rng)));
  std::vector<TokenId> plain{4, 7, 5}, padded{4, text::kPad, 7, 5, text::kPad};
  auto a = response_nll(plain, init, ctx, t.p);
  auto b = response_nll(padded, init, ctx, t.p);
  CHECK(a.count == b.count);
  CHECK(a.total.value()[0] == b.total.value()[0]);
}

TEST_CASE("teacher-forced loss gradients") {
  Toy t(7, 3, 4, 13);
  Rng rng(14);
  Var states(random_tensor(2, 4, rng), true);
  Var kb(random_tensor(1, 8, rng), true);
  Var h0(random_tensor(1, 4, rng), true);
  std::vector<TokenId> resp{4, 6, 5};
  std::vector<Var> inputs{states, kb, h0};
  for (const auto& e : t.ps.entries()) inputs.push_back(e.var);
  auto res = grad_check(
      [&] {
        DecoderContext ctx(states, kb, t.p);
        return response_nll(resp, initial_state(h0), ctx, t.p).total;
      },
      inputs);
  INFO(res.worst);
  CHECK(res.max_rel_error < 1e-5);
}

TEST_CASE("generation config validation") {
  GenerationConfig ok;
  CHECK_NOTHROW(ok.validate());
  GenerationConfig bad = ok;
  bad.max_len = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.beam_width = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.length_alpha = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("greedy respects max_len, ties and determinism") {
  TableScorer flat(std::vector<std::vector<double>>(7, std::vector<double>(7, 1.0 / 7)));
  GenerationConfig cfg;
  cfg.max_len = 1;
  auto h = greedy_search(flat, cfg);
  CHECK(h.tokens == std::vector<TokenId>{text::kBos, 0});
  CHECK(h.finished);

  Toy t(11, 4, 5, 15);
  Rng rng(16);
  cfg.max_len = 8;
  DecoderScorer s(t.p, random_context(t, rng), Var(random_tensor(1, 5, rng)));
  auto a = greedy_search(s, cfg);
  auto b = greedy_search(s, cfg);
  CHECK(a.tokens == b.tokens);
  CHECK(a.log_prob == b.log_prob);
  CHECK(a.length() <= 8);
}

TEST_CASE("hand-built toy model: beam finds the sequence greedy misses") {
  TableScorer s(toy_transitions());
  GenerationConfig cfg;
  cfg.max_len = 2;
  const auto oracle = enumerate_best(s, cfg);
  CHECK(oracle.tokens == std::vector<TokenId>{text::kBos, 5, 4});

  auto greedy = greedy_search(s, cfg);
  CHECK(greedy.tokens == std::vector<TokenId>{text::kBos, 4, 4});

  for (std::size_t width : {2u, 4u}) {
    cfg.beam_width = width;
    auto beam = beam_search(s, cfg);
    CHECK(beam.tokens == oracle.tokens);
    CHECK(beam.log_prob == doctest::Approx(std::log(0.4 * 0.9)));
  }
}

TEST_CASE("beam of width 1 is greedy on 100 random contexts") {
  Toy t(13, 4, 6, 17);
  Rng rng(18);
  GenerationConfig cfg;
  cfg.max_len = 6;
  for (int trial = 0; trial < 100; ++trial) {
    DecoderScorer s(t.p, random_context(t, rng), Var(random_tensor(1, 6, rng, -3.0, 3.0)));
    cfg.beam_width = 1;
    const auto beam = beam_search(s, cfg);
    const auto greedy = greedy_search(s, cfg);
    CHECK(beam.tokens == greedy.tokens);

    cfg.beam_width = 3;
    const auto wide = beam_search(s, cfg);
    CHECK(hypothesis_score(wide, cfg.length_alpha) >= hypothesis_score(greedy, cfg.length_alpha));
    CHECK(wide.length() <= cfg.max_len);
    CHECK(wide.finished);
  }
}

TEST_CASE("beam matches enumeration on small random tables") {
  Rng rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> probs(5, std::vector<double>(5));
    for (auto& row : probs) {
      double z = 0.0;
      for (std::size_t i = 0; i < row.size(); ++i) z += row[i] = (i < 2 ? 1e-3 : 0.05) + rng.uniform();
      for (auto& p : row) p /= z;
    }
    TableScorer s(probs);
    GenerationConfig cfg;
    cfg.max_len = 3;
    cfg.length_alpha = trial % 2 ? 0.0 : 0.7;
    // With width >= |V|^(max_len - 1) no prefix of the optimum is ever pruned.
    cfg.beam_width = 25;
    const auto oracle = enumerate_best(s, cfg);
    const auto beam = beam_search(s, cfg);
    CHECK(hypothesis_score(beam, cfg.length_alpha) == doctest::Approx(hypothesis_score(oracle, cfg.length_alpha)));
  }
}

TEST_CASE("strip framing drops BOS and EOS") {
  Hypothesis h{{text::kBos, 7, 8, text::kEos}, -1.0, true};
  CHECK(strip_framing(h) == std::vector<TokenId>{7, 8});
  Hypothesis open{{text::kBos, 7}, -1.0, true};
  CHECK(strip_framing(open) == std::vector<TokenId>{7});
  CHECK(hypothesis_score(h, 0.0) == -1.0);
  CHECK(hypothesis_score(h, 1.0) == doctest::Approx(-1.0 / 3.0));
}

}  // TEST_SUITE

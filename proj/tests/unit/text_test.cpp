// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "slotgen/errors.hpp"
#include "slotgen/num/optim.hpp"
#include "slotgen/text/embedding.hpp"
#include "slotgen/text/vocab.hpp"

using namespace slotgen;
using namespace slotgen::text;

namespace {
std::vector<Tokens> red_corpus() { return {tokenize("red hat"), tokenize("Red  shoe")}; }

double cosine(const num::Tensor& a, const num::Tensor& b, std::size_t row_a, std::size_t row_b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    dot += a.at(row_a, j) * b.at(row_b, j);
    na += a.at(row_a, j) * a.at(row_a, j);
    nb += b.at(row_b, j) * b.at(row_b, j);
  }
  return dot / std::sqrt(na * nb);
}
}  // namespace

TEST_SUITE("textcore") {

TEST_CASE("tokenize lowercases and splits on whitespace") {
  CHECK(tokenize("  Show ME\ta\nBag ") == Tokens{"show", "me", "a", "bag"});
  CHECK(tokenize("").empty());
}

TEST_CASE("build_vocab orders by frequency then lexicographically") {
  auto corpus = red_corpus();
  auto v = Vocabulary::build(corpus, 1);
  CHECK(v.tokens() == std::vector<std::string>{"<pad>", "<unk>", "<bos>", "<eos>", "red", "hat", "shoe"});

  auto v2 = Vocabulary::build(corpus, 2);
  CHECK(v2.size() == kReserved + 1);
  CHECK(v2.token(4) == "red");

  CHECK_THROWS_AS(Vocabulary::build(corpus, 0), InputError);
  std::vector<Tokens> empty;
  CHECK_THROWS_AS(Vocabulary::build(empty, 1), InputError);
}

TEST_CASE("encode maps unknowns to UNK and adds no framing") {
  auto corpus = red_corpus();
  auto v = Vocabulary::build(corpus, 1);
  CHECK(v.encode(Tokens{"red", "hat"}) == Ids{4, 5});
  CHECK(v.encode(Tokens{"zzz"}) == Ids{kUnk});
  CHECK(v.encode(Tokens{}).empty());
  auto ids = v.encode(Tokens{"shoe", "red"});
  CHECK(v.decode(ids) == Tokens{"shoe", "red"});
  for (auto id : v.encode(tokenize("red zzz hat shoe"))) CHECK(static_cast<std::size_t>(id) < v.size());
}

TEST_CASE("vocabulary construction is deterministic and file round-trips") {
  std::vector<Tokens> corpus = {tokenize("b a c a"), tokenize("c d b a")};
  auto v1 = Vocabulary::build(corpus, 1);
  auto v2 = Vocabulary::build(corpus, 1);
  CHECK(v1 == v2);
  CHECK(v1.token(4) == "a");  // a:3, then b:2 and c:2 tie -> lexicographic
  CHECK(v1.token(5) == "b");
  CHECK(v1.token(6) == "c");

  auto path = std::filesystem::temp_directory_path() / "slotgen_vocab_test.txt";
  v1.save(path);
  CHECK(Vocabulary::load(path) == v1);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(Vocabulary::parse("<pad>\n<unk>\nfoo\n"), ParseError);
  CHECK_THROWS_AS(Vocabulary::parse("<pad>\n<unk>\n<bos>\n<eos>\nbad token\n"), ParseError);
}

TEST_CASE("contextual stub is deterministic, normalised and context sensitive") {
  ContextualEmbedding ctx;
  CHECK(ctx.dim() == 768);
  Ids prev_a{10, 11, 12}, prev_b{13, 14};
  Ids user{5, 6, 7};
  auto x1 = ctx.contextual_embed(prev_a, user);
  auto x2 = ctx.contextual_embed(prev_a, user);
  CHECK(x1 == x2);
  CHECK(x1.rows() == 3);
  CHECK(x1.cols() == 768);
  for (std::size_t t = 0; t < x1.rows(); ++t) {
    double n = 0;
    for (std::size_t j = 0; j < x1.cols(); ++j) n += x1.at(t, j) * x1.at(t, j);
    CHECK(std::fabs(std::sqrt(n) - 1.0) < 1e-9);
  }
  auto y = ctx.contextual_embed(prev_b, user);
  const double same_token = cosine(x1, y, 0, 0);
  CHECK(same_token < 1.0 - 1e-6);
  // Token identity still dominates: the same token across contexts is closer
  // than two different tokens in one context.
  CHECK(same_token > cosine(x1, x1, 0, 1));
  CHECK_THROWS_AS(ctx.contextual_embed(prev_a, Ids{}), InputError);
}

TEST_CASE("trainable provider takes gradients, contextual never does") {
  num::ParameterSet ps;
  num::Rng rng(1);
  auto table = ps.add_uniform("emb", 10, 4, rng);
  TrainableEmbedding trainable(table);
  ContextualEmbedding ctx(16);
  Ids ids{1, 2, 3};
  num::Graph g;
  auto e1 = trainable.embed(ids, {});
  auto e2 = ctx.embed(ids, {});
  CHECK(e1.requires_grad());
  CHECK_FALSE(e2.requires_grad());
  CHECK(e1.cols() == trainable.dim());
  CHECK(e2.cols() == 16);
}

}  // TEST_SUITE

// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "slotgen/corpus/corpus.hpp"
#include "slotgen/errors.hpp"
#include "slotgen/num/random.hpp"
#include "slotgen/slots/slots.hpp"

using namespace slotgen;
using namespace slotgen::corpus;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "slotgen-corpus-test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool contains_phrase(const Tokens& haystack, const std::string& phrase) {
  const auto needle = text::tokenize(phrase);
  if (needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i)
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<long>(i))) return true;
  return false;
}

struct Fixture {
  Catalog catalog = generate_catalog(200, 5);
  KBStore kb = generate_kb(5);
};
}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("catalog generation") {
  CHECK(generate_catalog(50, 9) == generate_catalog(50, 9));
  CHECK(generate_catalog(50, 9) != generate_catalog(50, 10));
  auto one = generate_catalog(1, 3);
  REQUIRE(one.size() == 1);
  CHECK(one[0].id == 1);
  CHECK_THROWS_AS(generate_catalog(0, 3), InputError);
}

TEST_CASE("catalog attribute marginals stay within three binomial sigmas") {
  const std::size_t n = 10000;
  auto catalog = generate_catalog(n, 2024);
  auto check = [&](const std::vector<std::string>& list, auto field) {
    std::vector<std::size_t> counts(list.size(), 0);
    for (const auto& item : catalog) {
      REQUIRE(field(item) < list.size());
      ++counts[field(item)];
    }
    const double p = 1.0 / static_cast<double>(list.size());
    const double mean = static_cast<double>(n) * p;
    const double sigma = std::sqrt(static_cast<double>(n) * p * (1 - p));
    for (std::size_t c : counts) CHECK(std::abs(static_cast<double>(c) - mean) <= 3 * sigma);
  };
  check(Attributes::item_types(), [](const CatalogItem& i) { return std::size_t{i.item_type}; });
  check(Attributes::colors(), [](const CatalogItem& i) { return std::size_t{i.color}; });
  check(Attributes::materials(), [](const CatalogItem& i) { return std::size_t{i.material}; });
  check(Attributes::sizes(), [](const CatalogItem& i) { return std::size_t{i.size}; });
  check(Attributes::brands(), [](const CatalogItem& i) { return std::size_t{i.brand}; });
  check(Attributes::prices(), [](const CatalogItem& i) { return std::size_t{i.price}; });
  for (std::size_t i = 0; i < n; ++i) CHECK(catalog[i].id == static_cast<int>(i + 1));
}

TEST_CASE("image features") {
  auto catalog = generate_catalog(4000, 77);
  CatalogItem a = catalog[0], b = catalog[0];
  b.id = 999;
  CHECK(image_feature(a, 32) == image_feature(b, 32));
  for (std::size_t i = 0; i < 50; ++i) CHECK(std::sqrt(dot(image_feature(catalog[i], 32), image_feature(catalog[i], 32))) ==
                                              doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(image_feature(a, 7), InputError);

  // Same colour, different material versus no shared attribute at all.
  num::Rng rng(1);
  double shared = 0, disjoint = 0;
  std::size_t n_shared = 0, n_disjoint = 0;
  while (n_shared < 1000 || n_disjoint < 1000) {
    const auto& x = catalog[rng.below(catalog.size())];
    const auto& y = catalog[rng.below(catalog.size())];
    const double c = dot(image_feature(x, 64), image_feature(y, 64));
    const bool all_differ = x.item_type != y.item_type && x.color != y.color && x.material != y.material &&
                            x.size != y.size && x.brand != y.brand && x.price != y.price;
    if (x.color == y.color && x.material != y.material && n_shared < 1000) {
      CHECK(c > -1.0);
      CHECK(c < 1.0);
      shared += c;
      ++n_shared;
    } else if (all_differ && n_disjoint < 1000) {
      disjoint += c;
      ++n_disjoint;
    }
  }
  CHECK(shared / 1000 > disjoint / 1000);
}

TEST_CASE("knowledge base") {
  auto kb = generate_kb(4);
  CHECK(kb.celebrities.size() == 30);
  CHECK_NOTHROW(kb.validate());
  CHECK(kb == generate_kb(4));
  auto look = kb.lookup("celebrity:" + kb.celebrities.begin()->first);
  REQUIRE(look.has_value());
  CHECK(look->entity.size() >= 2);
  CHECK_FALSE(kb.lookup("celebrity:nobody").has_value());
  CHECK_FALSE(kb.lookup("-").has_value());
  KBStore bad = kb;
  bad.celebrities["ana"] = {"acme"};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("dialogue generation is pure and validates") {
  Fixture f;
  CHECK(generate_dialogue(f.catalog, f.kb, 42, 4) == generate_dialogue(f.catalog, f.kb, 42, 4));
  for (std::uint64_t s = 0; s < 300; ++s) {
    auto d = generate_dialogue(f.catalog, f.kb, s, 1 + s % 20);
    CHECK(d.turns.size() == 2 * (1 + s % 20));
    CHECK_NOTHROW(validate(d, &f.catalog, &f.kb));
    for (const auto& t : d.turns) CHECK(t.image_ids.size() <= kMaxImagesPerTurn);
  }
  CHECK_THROWS_AS(generate_dialogue(f.catalog, f.kb, 1, 0), InputError);
  CHECK_THROWS_AS(generate_dialogue(f.catalog, f.kb, 1, 21), InputError);
  CHECK_THROWS_AS(generate_dialogue(Catalog{}, f.kb, 1, 4), InputError);
}

TEST_CASE("tagged spans carry the template fills") {
  Fixture f;
  std::size_t spans = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    auto d = generate_dialogue(f.catalog, f.kb, s, 6);
    for (std::size_t i = 0; i + 1 < d.turns.size(); i += 2) {
      const auto& user = d.turns[i];
      const auto& reply = d.turns[i + 1];
      auto values = slots::extract_slot_values(slots::TagSet::parse_all(user.tags), user.tokens);
      for (const auto& [type, list] : values) {
        for (const auto& v : list) {
          const auto& inventory = Attributes::values(type);
          CHECK(std::find(inventory.begin(), inventory.end(), v) != inventory.end());
          CHECK(contains_phrase(reply.tokens, v));
          ++spans;
        }
      }
    }
  }
  CHECK(spans > 1000);
}

TEST_CASE("positional references stay within the images shown") {
  Fixture f;
  std::size_t refs = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    auto d = generate_dialogue(f.catalog, f.kb, s, 8);
    for (std::size_t i = 2; i < d.turns.size(); i += 2) {
      auto values = slots::extract_slot_values(slots::TagSet::parse_all(d.turns[i].tags), d.turns[i].tokens);
      auto it = values.find(slots::SlotType::kPosition);
      if (it == values.end()) continue;
      const auto& pos = Attributes::positions();
      const auto idx = static_cast<std::size_t>(std::find(pos.begin(), pos.end(), it->second.front()) - pos.begin());
      CHECK(idx < d.turns[i - 1].image_ids.size());
      ++refs;
    }
  }
  CHECK(refs > 100);
}

TEST_CASE("system responses are reconstructible from the slot state") {
  Fixture f;
  std::size_t kb_dialogues = 0;
  const std::size_t n = 1000;
  for (std::uint64_t s = 0; s < n; ++s) {
    auto d = generate_dialogue(f.catalog, f.kb, num::mix64(9, s), 4);
    auto expected = reconstruct_responses(d, f.catalog, f.kb);
    REQUIRE(expected.size() == d.turns.size() / 2);
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK(expected[k] == d.turns[2 * k + 1].tokens);
    bool has_kb = false;
    for (const auto& t : d.turns) has_kb |= !t.kb_ref.empty();
    kb_dialogues += has_kb;
  }
  // About one dialogue in five needs the knowledge base.
  const double rate = static_cast<double>(kb_dialogues) / n;
  CHECK(rate > 0.15);
  CHECK(rate < 0.25);
}

TEST_CASE("endorsement checks answer from the knowledge base") {
  KBStore kb;
  kb.celebrities["ana"] = {"nike", "zara"};
  CHECK(text::join(ResponseRules::endorsement_check("ana", kb.celebrities["ana"], "zara")) ==
        "yes , ana endorses nike and zara");
  CHECK(text::join(ResponseRules::endorsement_check("ana", kb.celebrities["ana"], "puma")) ==
        "no , ana endorses nike and zara");
}

TEST_CASE("corpus files round-trip") {
  Fixture f;
  auto records = generate_corpus(f.catalog, f.kb, 3, 50, 4, "train");
  auto path = scratch("small.tsv");
  write_corpus(path, records);
  CHECK(read_corpus(path) == records);

  auto line = format_record(records[0]);
  CHECK(line.rfind("train-0\t8\tuser\t", 0) == 0);
  CHECK(parse_record(line, 1) == records[0]);

  auto kb_path = scratch("kb.tsv");
  write_kb(kb_path, f.kb);
  CHECK(read_kb(kb_path) == f.kb);
  auto cat_path = scratch("catalog.tsv");
  write_catalog(cat_path, f.catalog);
  CHECK(read_catalog(cat_path) == f.catalog);
}

TEST_CASE("truncated corpus reports the exact line") {
  Fixture f;
  auto records = generate_corpus(f.catalog, f.kb, 4, 10, 3, "x");
  auto path = scratch("trunc.tsv");
  write_corpus(path, records);
  auto content = slurp(path);
  std::size_t cut = 0;
  for (int k = 0; k < 6; ++k) cut = content.find('\n', cut) + 1;
  {
    std::ofstream out(path, std::ios::binary);
    out << content.substr(0, cut + 25);
  }
  try {
    read_corpus(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
}

TEST_CASE("malformed and invalid records") {
  CHECK_THROWS_AS(parse_record("id-only", 3), ParseError);
  CHECK_THROWS_AS(parse_record("d\t2\tuser\thi\t-\tO\t-", 3), ParseError);
  CHECK_THROWS_AS(parse_record("d\t1\tuser\thi\tx\tO\t-", 3), ParseError);
  try {
    parse_record("d\t1\twizard\thi\t-\tO\t-", 12);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 12") != std::string::npos);
  }

  DialogueRecord r{"bad-7", {{Role::kSystem, {"hi"}, {}, {}, {}}}};
  try {
    validate(r);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bad-7") != std::string::npos);
  }
  DialogueRecord mis{"m", {{Role::kUser, {"a", "b"}, {}, {"O"}, {}}}};
  CHECK_THROWS_AS(validate(mis), ValidationError);
  DialogueRecord many{"m", {{Role::kUser, {"a"}, {1, 2, 3, 4, 5, 6}, {"O"}, {}}}};
  CHECK_THROWS_AS(validate(many), ValidationError);
  CHECK_THROWS_AS(write_corpus(scratch("bad.tsv"), {mis}), ValidationError);
  DialogueRecord ghost{"g", {{Role::kUser, {"a"}, {100000}, {"O"}, {}}}};
  Fixture f;
  CHECK_THROWS_AS(validate(ghost, &f.catalog), ValidationError);
}

TEST_CASE("a 10k-dialogue corpus rewrites byte-identically") {
  Fixture f;
  auto records = generate_corpus(f.catalog, f.kb, 8, 10000, 4, "big");
  auto first = scratch("big1.tsv"), second = scratch("big2.tsv");
  write_corpus(first, records);
  write_corpus(second, read_corpus(first));
  const auto a = slurp(first), b = slurp(second);
  CHECK(a.size() > 1000000);
  CHECK(a == b);
}

TEST_CASE("dataset directories round-trip") {
  DatasetSpec spec;
  spec.train = 20;
  spec.valid = spec.test = 5;
  auto ds = generate_dataset(spec, 12);
  auto dir = scratch("ds");
  ds.save(dir);
  auto back = Dataset::load(dir);
  CHECK(back.catalog == ds.catalog);
  CHECK(back.kb == ds.kb);
  CHECK(back.train == ds.train);
  CHECK(back.test == ds.test);
}

}  // TEST_SUITE

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slotgen/num/tensor.hpp"
#include "slotgen/slots/tags.hpp"
#include "slotgen/text/vocab.hpp"

namespace slotgen::corpus {

using slots::SlotType;
using text::Tokens;

/// Hard limit on images attached to one turn.
inline constexpr std::size_t kMaxImagesPerTurn = 5;

/// Fixed attribute inventories. Values may span several tokens ("dark blue").
struct Attributes {
  static const std::vector<std::string>& item_types();
  static const std::vector<std::string>& colors();
  static const std::vector<std::string>& materials();
  static const std::vector<std::string>& sizes();
  static const std::vector<std::string>& brands();
  static const std::vector<std::string>& prices();
  static const std::vector<std::string>& positions();  // "1st".."5th"
  /// Inventory for a slot type; position is included.
  static const std::vector<std::string>& values(SlotType t);
};

struct CatalogItem {
  int id = 0;
  std::uint8_t item_type = 0, color = 0, material = 0, size = 0, brand = 0, price = 0;

  const std::string& value(SlotType t) const;
  bool same_attributes(const CatalogItem& o) const {
    return item_type == o.item_type && color == o.color && material == o.material && size == o.size &&
           brand == o.brand && price == o.price;
  }
  friend bool operator==(const CatalogItem&, const CatalogItem&) = default;
};

using Catalog = std::vector<CatalogItem>;

/// Ids 1..n, attributes drawn uniformly. Throws InputError when n < 1.
Catalog generate_catalog(std::size_t n, std::uint64_t seed);
const CatalogItem* find_item(const Catalog& catalog, int id);

/// Deterministic synthetic image feature: one-hot attributes through a frozen
/// random matrix, L2-normalised. Throws InputError when d_img < 8.
std::vector<double> image_feature(const CatalogItem& item, std::size_t d_img);

/// Celebrity endorsements and occasion queries.
struct KBStore {
  std::map<std::string, std::vector<std::string>> celebrities;  // name -> brands
  std::map<std::string, std::vector<std::pair<SlotType, std::string>>> queries;  // occasion -> constraints

  bool empty() const { return celebrities.empty() && queries.empty(); }
  /// Throws ValidationError if a brand or constraint value is not in the inventories.
  void validate() const;

  /// Token sequences fed to the KB encoder for a reference such as
  /// "celebrity:ana" or "query:party". Returns nullopt for "-" or empty.
  struct Lookup {
    Tokens query;
    Tokens entity;
  };
  std::optional<Lookup> lookup(const std::string& ref) const;
  /// Reference for a user utterance: the first token naming a celebrity
  /// ("celebrity:<name>") or an occasion ("query:<occasion>"); empty if none.
  std::string infer_ref(const Tokens& tokens) const;

  friend bool operator==(const KBStore&, const KBStore&) = default;
};

KBStore generate_kb(std::uint64_t seed, std::size_t n_celebrities = 30);

enum class Role : std::uint8_t { kUser, kSystem };
std::string_view role_name(Role r);

struct Turn {
  Role role = Role::kUser;
  Tokens tokens;
  std::vector<int> image_ids;
  std::vector<std::string> tags;  // user turns only, one per token
  std::string kb_ref;             // empty when absent

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct DialogueRecord {
  std::string id;
  std::vector<Turn> turns;

  friend bool operator==(const DialogueRecord&, const DialogueRecord&) = default;
};

/// Checks the record invariants: roles alternate starting with the user, tags
/// align with tokens on user turns and are absent on system turns, at most five
/// images, tokens are non-empty and free of separator characters. When
/// `catalog`/`kb` are given, image ids and KB references must resolve. Throws
/// ValidationError naming the dialogue id.
void validate(const DialogueRecord& record, const Catalog* catalog = nullptr, const KBStore* kb = nullptr);

/// Cumulative constraint state of a shopping dialogue.
struct SlotState {
  std::map<SlotType, std::string> values;
  std::vector<int> shown;  // images of the last system turn

  std::optional<std::string> get(SlotType t) const;
};

/// System response rules. The generator produces every gold response through
/// these functions, so a response can be recomputed from the slot state.
struct ResponseRules {
  /// "here are some <color> <material> <item_type> options [by <brand>] [in size <size>]"
  static Tokens listing(const SlotState& state);
  /// "the <pos> one is a <color> <material> <item_type> by <brand> , here are similar ones"
  static Tokens describe_position(const std::string& position, const CatalogItem& item);
  /// "that is a <color> <material> <item_type> by <brand> , here are similar ones"
  static Tokens describe_attached(const CatalogItem& item);
  /// "<name> endorses <b1> and <b2>"
  static Tokens endorsements(const std::string& celebrity, const std::vector<std::string>& brands);
  /// "yes , <endorsements>" when `brand` is endorsed, otherwise "no , <endorsements>"
  static Tokens endorsement_check(const std::string& celebrity, const std::vector<std::string>& brands,
                                  const std::string& brand);
};

/// Replays a dialogue from its gold user tags, attached images and KB
/// references, and returns the system response each system turn should carry.
/// Image selection is not replayed; the shown images are read from the record.
/// Throws ValidationError when a turn cannot be interpreted.
std::vector<Tokens> reconstruct_responses(const DialogueRecord& record, const Catalog& catalog, const KBStore& kb);

struct GeneratorOptions {
  double kb_dialogue_rate = 0.2;
  /// Celebrities users may ask about; empty means every KB celebrity.
  std::vector<std::string> celebrities;
};

/// Builds one dialogue of `n_turn_pairs` user/system pairs. A pure function of
/// its arguments. Throws InputError for an empty catalog or n_turn_pairs
/// outside [1, 20].
DialogueRecord generate_dialogue(const Catalog& catalog, const KBStore& kb, std::uint64_t seed,
                                 std::size_t n_turn_pairs, const GeneratorOptions& opts = {});

/// `count` dialogues with ids "<prefix>-<index>" and per-dialogue seeds
/// mix(seed, index).
std::vector<DialogueRecord> generate_corpus(const Catalog& catalog, const KBStore& kb, std::uint64_t seed,
                                            std::size_t count, std::size_t n_turn_pairs, const std::string& prefix,
                                            const GeneratorOptions& opts = {});

// ---- file formats ----------------------------------------------------------

std::string format_record(const DialogueRecord& record);
/// Throws ParseError mentioning `line_no`.
DialogueRecord parse_record(const std::string& line, std::size_t line_no);

void write_corpus(const std::filesystem::path& path, const std::vector<DialogueRecord>& records);
std::vector<DialogueRecord> read_corpus(const std::filesystem::path& path);

std::string format_kb(const KBStore& kb);
/// Throws ParseError with the line number.
KBStore parse_kb(const std::string& text);
void write_kb(const std::filesystem::path& path, const KBStore& kb);
KBStore read_kb(const std::filesystem::path& path);

std::string format_catalog(const Catalog& catalog);
Catalog parse_catalog(const std::string& text);
void write_catalog(const std::filesystem::path& path, const Catalog& catalog);
Catalog read_catalog(const std::filesystem::path& path);

/// A generated data directory: catalog.tsv, kb.tsv, train.tsv, valid.tsv, test.tsv.
struct Dataset {
  Catalog catalog;
  KBStore kb;
  std::vector<DialogueRecord> train, valid, test;

  void save(const std::filesystem::path& dir) const;
  static Dataset load(const std::filesystem::path& dir);
};

struct DatasetSpec {
  std::size_t catalog_size = 200;
  std::size_t train = 500, valid = 100, test = 100;
  std::size_t turn_pairs = 4;
  std::size_t celebrities = 30;
  /// The last k celebrities (in name order) appear only in the test split.
  std::size_t held_out_celebrities = 0;
  GeneratorOptions generator;
};

Dataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed);

}  // namespace slotgen::corpus

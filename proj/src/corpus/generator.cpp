// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "slotgen/corpus/corpus.hpp"
#include "slotgen/errors.hpp"
#include "slotgen/num/random.hpp"
#include "slotgen/slots/slots.hpp"

namespace slotgen::corpus {

using slots::TagSet;

const std::vector<std::string>& Attributes::item_types() {
  static const std::vector<std::string> v = {"shirt", "dress", "bag",   "shoes", "jacket",
                                             "skirt", "scarf", "watch", "trousers", "sandals"};
  return v;
}
const std::vector<std::string>& Attributes::colors() {
  static const std::vector<std::string> v = {"red",   "blue", "black", "white",     "green",
                                             "brown", "pink", "grey",  "dark blue", "light grey"};
  return v;
}
const std::vector<std::string>& Attributes::materials() {
  static const std::vector<std::string> v = {"leather", "cotton", "silk", "denim", "wool", "linen"};
  return v;
}
const std::vector<std::string>& Attributes::sizes() {
  static const std::vector<std::string> v = {"small", "medium", "large", "extra large"};
  return v;
}
const std::vector<std::string>& Attributes::brands() {
  static const std::vector<std::string> v = {"zara", "gucci", "prada", "nike", "adidas", "levis", "armani", "puma"};
  return v;
}
const std::vector<std::string>& Attributes::prices() {
  static const std::vector<std::string> v = {"cheap", "moderate", "expensive"};
  return v;
}
const std::vector<std::string>& Attributes::positions() {
  static const std::vector<std::string> v = {"1st", "2nd", "3rd", "4th", "5th"};
  return v;
}
const std::vector<std::string>& Attributes::values(SlotType t) {
  switch (t) {
    case SlotType::kColor: return colors();
    case SlotType::kMaterial: return materials();
    case SlotType::kItemType: return item_types();
    case SlotType::kSize: return sizes();
    case SlotType::kPosition: return positions();
    case SlotType::kBrand: return brands();
  }
  throw InputError("unknown slot type");
}

const std::string& CatalogItem::value(SlotType t) const {
  switch (t) {
    case SlotType::kColor: return Attributes::colors()[color];
    case SlotType::kMaterial: return Attributes::materials()[material];
    case SlotType::kItemType: return Attributes::item_types()[item_type];
    case SlotType::kSize: return Attributes::sizes()[size];
    case SlotType::kBrand: return Attributes::brands()[brand];
    case SlotType::kPosition: break;
  }
  throw InputError("catalog items have no position attribute");
}

Catalog generate_catalog(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InputError("catalog size must be >= 1");
  num::Rng rng(num::mix64(seed, 0xca7a109ULL));
  Catalog out;
  out.reserve(n);
  auto draw = [&](const std::vector<std::string>& list) { return static_cast<std::uint8_t>(rng.below(list.size())); };
  for (std::size_t i = 0; i < n; ++i) {
    CatalogItem item;
    item.id = static_cast<int>(i + 1);
    item.item_type = draw(Attributes::item_types());
    item.color = draw(Attributes::colors());
    item.material = draw(Attributes::materials());
    item.size = draw(Attributes::sizes());
    item.brand = draw(Attributes::brands());
    item.price = draw(Attributes::prices());
    out.push_back(item);
  }
  return out;
}

const CatalogItem* find_item(const Catalog& catalog, int id) {
  // Generated catalogs are id-ordered from 1; fall back to a scan otherwise.
  if (id >= 1 && static_cast<std::size_t>(id) <= catalog.size() && catalog[id - 1].id == id) return &catalog[id - 1];
  for (const auto& item : catalog)
    if (item.id == id) return &item;
  return nullptr;
}

std::vector<double> image_feature(const CatalogItem& item, std::size_t d_img) {
  if (d_img < 8) throw InputError("image feature dimension must be >= 8");
  const std::array<std::size_t, 6> sizes = {Attributes::item_types().size(), Attributes::colors().size(),
                                            Attributes::materials().size(),  Attributes::sizes().size(),
                                            Attributes::brands().size(),     Attributes::prices().size()};
  const std::array<std::size_t, 6> hot = {item.item_type, item.color, item.material,
                                          item.size,      item.brand, item.price};
  std::vector<double> out(d_img, 0.0);
  std::size_t offset = 0;
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    // Row (offset + hot[a]) of the frozen projection, generated on demand.
    num::Rng row(num::mix64(0x1a6e5eedULL, (d_img << 16) + offset + hot[a]));
    for (auto& v : out) v += row.normal();
    offset += sizes[a];
  }
  double norm = 0.0;
  for (double v : out) norm += v * v;
  norm = std::sqrt(norm);
  for (auto& v : out) v /= norm;
  return out;
}

// ---- knowledge base -----------------------------------------------------------

namespace {
const std::vector<std::string>& celebrity_names() {
  static const std::vector<std::string> v = {
      "ana",  "bella", "carla", "diego", "elena", "felix", "gina", "hugo", "iris", "jonas",
      "kira", "liam",  "maya",  "nico",  "olga",  "pablo", "quinn", "rosa", "sami", "tara",
      "ugo",  "vera",  "wes",   "xena",  "yara",  "zane",  "amir", "bruno", "cleo", "dara",
      "emil", "faye",  "gael",  "hana",  "ivan",  "jade",  "kemal", "lena", "milo", "nora"};
  return v;
}
const std::vector<std::string>& occasions() {
  static const std::vector<std::string> v = {"party", "wedding", "office", "beach",
                                             "gym",   "dinner",  "interview", "picnic"};
  return v;
}

bool in_list(const std::vector<std::string>& list, const std::string& v) {
  return std::find(list.begin(), list.end(), v) != list.end();
}
}  // namespace

void KBStore::validate() const {
  for (const auto& [name, brands] : celebrities) {
    if (brands.empty()) throw ValidationError("celebrity '" + name + "' endorses no brand");
    for (const auto& b : brands)
      if (!in_list(Attributes::brands(), b))
        throw ValidationError("celebrity '" + name + "' endorses unknown brand '" + b + "'");
  }
  for (const auto& [key, constraints] : queries) {
    if (constraints.empty()) throw ValidationError("query '" + key + "' has no constraints");
    for (const auto& [type, value] : constraints)
      if (!in_list(Attributes::values(type), value))
        throw ValidationError("query '" + key + "' has unknown " + std::string(slots::slot_name(type)) + " '" +
                              value + "'");
  }
}

std::optional<KBStore::Lookup> KBStore::lookup(const std::string& ref) const {
  if (ref.empty() || ref == "-") return std::nullopt;
  const auto colon = ref.find(':');
  if (colon == std::string::npos) return std::nullopt;
  const std::string kind = ref.substr(0, colon), key = ref.substr(colon + 1);
  Lookup out;
  if (kind == "celebrity") {
    auto it = celebrities.find(key);
    if (it == celebrities.end()) return std::nullopt;
    out.query = {key};
    for (const auto& b : it->second) {
      auto toks = text::tokenize(b);
      out.entity.insert(out.entity.end(), toks.begin(), toks.end());
    }
    return out;
  }
  if (kind == "query") {
    auto it = queries.find(key);
    if (it == queries.end()) return std::nullopt;
    out.query = {key};
    for (const auto& [type, value] : it->second) {
      auto toks = text::tokenize(value);
      out.entity.insert(out.entity.end(), toks.begin(), toks.end());
    }
    return out;
  }
  return std::nullopt;
}

std::string KBStore::infer_ref(const Tokens& tokens) const {
  for (const auto& t : tokens) {
    if (celebrities.count(t)) return "celebrity:" + t;
    if (queries.count(t)) return "query:" + t;
  }
  return {};
}

KBStore generate_kb(std::uint64_t seed, std::size_t n_celebrities) {
  if (n_celebrities > celebrity_names().size())
    throw InputError("at most " + std::to_string(celebrity_names().size()) + " celebrities are available");
  num::Rng rng(num::mix64(seed, 0x6b62ULL));
  KBStore kb;
  const auto& brands = Attributes::brands();
  for (std::size_t i = 0; i < n_celebrities; ++i) {
    const std::size_t a = rng.below(brands.size());
    std::size_t b = rng.below(brands.size() - 1);
    if (b >= a) ++b;
    kb.celebrities[celebrity_names()[i]] = {brands[std::min(a, b)], brands[std::max(a, b)]};
  }
  for (const auto& occ : occasions()) {
    kb.queries[occ] = {{SlotType::kColor, Attributes::colors()[rng.below(Attributes::colors().size())]},
                       {SlotType::kMaterial, Attributes::materials()[rng.below(Attributes::materials().size())]}};
  }
  return kb;
}

std::string_view role_name(Role r) { return r == Role::kUser ? "user" : "system"; }

std::optional<std::string> SlotState::get(SlotType t) const {
  auto it = values.find(t);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

// ---- responses ------------------------------------------------------------------

namespace {
void append(Tokens& out, const std::string& phrase) {
  auto toks = text::tokenize(phrase);
  out.insert(out.end(), toks.begin(), toks.end());
}

void describe_item(Tokens& out, const CatalogItem& item) {
  append(out, item.value(SlotType::kColor));
  append(out, item.value(SlotType::kMaterial));
  append(out, item.value(SlotType::kItemType));
  append(out, "by");
  append(out, item.value(SlotType::kBrand));
  append(out, ", here are similar ones");
}
}  // namespace

Tokens ResponseRules::listing(const SlotState& state) {
  Tokens out;
  append(out, "here are some");
  if (auto c = state.get(SlotType::kColor)) append(out, *c);
  if (auto m = state.get(SlotType::kMaterial)) append(out, *m);
  append(out, state.get(SlotType::kItemType).value_or("item"));
  append(out, "options");
  if (auto b = state.get(SlotType::kBrand)) append(out, "by " + *b);
  if (auto s = state.get(SlotType::kSize)) append(out, "in size " + *s);
  return out;
}

Tokens ResponseRules::describe_position(const std::string& position, const CatalogItem& item) {
  Tokens out;
  append(out, "the " + position + " one is a");
  describe_item(out, item);
  return out;
}

Tokens ResponseRules::describe_attached(const CatalogItem& item) {
  Tokens out;
  append(out, "that is a");
  describe_item(out, item);
  return out;
}

Tokens ResponseRules::endorsements(const std::string& celebrity, const std::vector<std::string>& brands) {
  Tokens out;
  append(out, celebrity + " endorses");
  for (std::size_t i = 0; i < brands.size(); ++i) {
    if (i) append(out, "and");
    append(out, brands[i]);
  }
  return out;
}

Tokens ResponseRules::endorsement_check(const std::string& celebrity, const std::vector<std::string>& brands,
                                        const std::string& brand) {
  Tokens out;
  append(out, std::find(brands.begin(), brands.end(), brand) != brands.end() ? "yes ," : "no ,");
  auto rest = endorsements(celebrity, brands);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

// ---- dialogue generation -------------------------------------------------------

namespace {

struct Utterance {
  Tokens tokens;
  std::vector<std::string> tags;

  void words(const std::string& phrase) {
    for (auto& t : text::tokenize(phrase)) {
      tokens.push_back(std::move(t));
      tags.emplace_back("O");
    }
  }
  void slot(SlotType type, const std::string& value) {
    auto toks = text::tokenize(value);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      tokens.push_back(std::move(toks[i]));
      tags.push_back(TagSet::name(i == 0 ? TagSet::begin_tag(type) : TagSet::inside_tag(type)));
    }
  }
};

class DialogueBuilder {
 public:
  DialogueBuilder(const Catalog& catalog, const KBStore& kb, std::uint64_t seed)
      : catalog_(catalog), kb_(kb), rng_(seed) {}

  template <class T>
  const T& pick(const std::vector<T>& list) {
    return list[rng_.below(list.size())];
  }
  bool chance(double p) { return rng_.uniform() < p; }
  double uniform() { return rng_.uniform(); }
  std::size_t below(std::size_t n) { return rng_.below(n); }

  void request() {
    state_ = {};
    const auto& type = pick(Attributes::item_types());
    state_.values[SlotType::kItemType] = type;
    if (chance(0.7)) state_.values[SlotType::kColor] = pick(Attributes::colors());
    if (chance(0.5)) state_.values[SlotType::kMaterial] = pick(Attributes::materials());
    if (chance(0.4)) state_.values[SlotType::kBrand] = pick(Attributes::brands());
    if (chance(0.3)) state_.values[SlotType::kSize] = pick(Attributes::sizes());

    static const std::vector<std::string> openers = {"show me a", "i am looking for a", "can you show me some",
                                                     "i want a", "please find me a"};
    Utterance u;
    u.words(pick(openers));
    if (auto c = state_.get(SlotType::kColor)) u.slot(SlotType::kColor, *c);
    if (auto m = state_.get(SlotType::kMaterial)) u.slot(SlotType::kMaterial, *m);
    u.slot(SlotType::kItemType, type);
    std::vector<int> order;
    if (state_.get(SlotType::kBrand)) order.push_back(0);
    if (state_.get(SlotType::kSize)) order.push_back(1);
    if (order.size() == 2 && chance(0.5)) std::swap(order[0], order[1]);
    for (int o : order) {
      if (o == 0) {
        u.words(chance(0.5) ? "by" : "from");
        u.slot(SlotType::kBrand, *state_.get(SlotType::kBrand));
      } else if (chance(0.5)) {
        u.words("in size");
        u.slot(SlotType::kSize, *state_.get(SlotType::kSize));
      } else {
        u.words("in");
        u.slot(SlotType::kSize, *state_.get(SlotType::kSize));
        u.words("size");
      }
    }
    user(std::move(u));
    system(ResponseRules::listing(state_), true);
  }

  void refine() {
    static const std::vector<SlotType> kinds = {SlotType::kColor, SlotType::kMaterial, SlotType::kBrand,
                                                SlotType::kSize};
    const SlotType kind = pick(kinds);
    const auto& list = Attributes::values(kind);
    const auto current = state_.get(kind);
    std::string value;
    do {
      value = pick(list);
    } while (current && value == *current);
    state_.values[kind] = value;

    Utterance u;
    const int form = static_cast<int>(rng_.below(2));
    switch (kind) {
      case SlotType::kColor:
        if (form == 0) {
          u.words("show me something in");
          u.slot(kind, value);
        } else {
          u.words("what about");
          u.slot(kind, value);
          u.words("ones");
        }
        break;
      case SlotType::kMaterial:
        u.words(form == 0 ? "i prefer" : "do you have it in");
        u.slot(kind, value);
        break;
      case SlotType::kBrand:
        u.words(form == 0 ? "anything from" : "do you have");
        u.slot(kind, value);
        if (form == 1) u.words("ones");
        break;
      default:
        u.words(form == 0 ? "do you have it in size" : "i need size");
        u.slot(kind, value);
        break;
    }
    user(std::move(u));
    system(ResponseRules::listing(state_), true);
  }

  void position() {
    const std::size_t idx = rng_.below(state_.shown.size());
    const std::string& pos = Attributes::positions()[idx];
    const CatalogItem& item = *find_item(catalog_, state_.shown[idx]);
    Utterance u;
    switch (rng_.below(3)) {
      case 0:
        u.words("show me more like the");
        u.slot(SlotType::kPosition, pos);
        u.words("image");
        break;
      case 1:
        u.words("i like the");
        u.slot(SlotType::kPosition, pos);
        u.words("one");
        break;
      default:
        u.words("tell me more about the");
        u.slot(SlotType::kPosition, pos);
        u.words("image");
        break;
    }
    adopt(item);
    user(std::move(u));
    system(ResponseRules::describe_position(pos, item), true);
  }

  void like_this() {
    const CatalogItem& item = pick(catalog_);
    static const std::vector<std::string> forms = {"show me something like this", "do you have anything similar to this",
                                                   "find items like this one"};
    Utterance u;
    u.words(pick(forms));
    adopt(item);
    user(std::move(u), {item.id});
    system(ResponseRules::describe_attached(item), true);
  }

  bool can_ask_occasion() const { return !kb_.queries.empty() && state_.get(SlotType::kItemType).has_value(); }

  void kb_turn() {
    const bool occasion = can_ask_occasion() && (kb_.celebrities.empty() || chance(0.5));
    if (occasion) {
      auto it = std::next(kb_.queries.begin(), static_cast<long>(rng_.below(kb_.queries.size())));
      static const std::vector<std::string> forms = {"i need something for a", "what should i wear to a",
                                                     "suggest something for a"};
      Utterance u;
      u.words(pick(forms));
      u.words(it->first);
      for (const auto& [type, value] : it->second) state_.values[type] = value;
      user(std::move(u), {}, "query:" + it->first);
      system(ResponseRules::listing(state_), true);
      return;
    }
    auto it = kb_.celebrities.end();
    if (pool_.empty()) {
      it = std::next(kb_.celebrities.begin(), static_cast<long>(rng_.below(kb_.celebrities.size())));
    } else {
      it = kb_.celebrities.find(pool_[rng_.below(pool_.size())]);
    }
    if (const auto brand = state_.get(SlotType::kBrand); brand && chance(0.5)) {
      Utterance u;
      u.words("will");
      u.words(it->first);
      u.words("endorse this");
      user(std::move(u), {}, "celebrity:" + it->first);
      system(ResponseRules::endorsement_check(it->first, it->second, *brand), false);
      return;
    }
    static const std::vector<std::string> forms = {"which brands does", "what does", "tell me what"};
    const std::size_t form = rng_.below(forms.size());
    Utterance u;
    u.words(forms[form]);
    u.words(it->first);
    u.words(form == 2 ? "endorses" : "endorse");
    user(std::move(u), {}, "celebrity:" + it->first);
    system(ResponseRules::endorsements(it->first, it->second), false);
  }

  bool kb_possible() const { return !kb_.celebrities.empty() || can_ask_occasion(); }
  bool can_refer() const { return state_.shown.size() >= 2; }
  bool has_state() const { return state_.get(SlotType::kItemType).has_value(); }

  DialogueRecord finish(std::string id) { return {std::move(id), std::move(turns_)}; }
  void restrict_celebrities(std::vector<std::string> pool) {
    for (const auto& name : pool)
      if (!kb_.celebrities.count(name)) throw InputError("celebrity pool names an unknown celebrity '" + name + "'");
    pool_ = std::move(pool);
  }

 private:
  void adopt(const CatalogItem& item) {
    state_ = {};
    for (auto t : {SlotType::kItemType, SlotType::kColor, SlotType::kMaterial, SlotType::kBrand})
      state_.values[t] = item.value(t);
  }

  void user(Utterance u, std::vector<int> images = {}, std::string kb_ref = {}) {
    turns_.push_back({Role::kUser, std::move(u.tokens), std::move(images), std::move(u.tags), std::move(kb_ref)});
  }

  void system(Tokens response, bool show_images) {
    std::vector<int> images;
    if (show_images) images = select_items(2 + rng_.below(4));
    state_.shown = images;
    turns_.push_back({Role::kSystem, std::move(response), std::move(images), {}, {}});
  }

  /// Best attribute matches for the current state, ties broken randomly.
  std::vector<int> select_items(std::size_t k) {
    std::vector<std::pair<std::pair<int, std::uint64_t>, int>> scored;
    scored.reserve(catalog_.size());
    for (const auto& item : catalog_) {
      int score = 0;
      for (const auto& [type, value] : state_.values)
        if (type != SlotType::kPosition && item.value(type) == value) score += type == SlotType::kItemType ? 4 : 1;
      scored.push_back({{-score, rng_.next()}, item.id});
    }
    k = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(k), scored.end());
    std::vector<int> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
    return out;
  }

  const Catalog& catalog_;
  const KBStore& kb_;
  num::Rng rng_;
  SlotState state_;
  std::vector<Turn> turns_;
  std::vector<std::string> pool_;
};

}  // namespace

DialogueRecord generate_dialogue(const Catalog& catalog, const KBStore& kb, std::uint64_t seed,
                                 std::size_t n_turn_pairs, const GeneratorOptions& opts) {
  if (catalog.empty()) throw InputError("cannot generate dialogues from an empty catalog");
  if (n_turn_pairs < 1 || n_turn_pairs > 20) throw InputError("n_turn_pairs must be in [1, 20]");
  DialogueBuilder b(catalog, kb, seed);
  b.restrict_celebrities(opts.celebrities);
  const bool with_kb = !kb.empty() && b.chance(opts.kb_dialogue_rate);
  std::size_t kb_at = n_turn_pairs;
  if (with_kb) kb_at = n_turn_pairs > 1 ? 1 + b.below(n_turn_pairs - 1) : 0;
  for (std::size_t p = 0; p < n_turn_pairs; ++p) {
    if (p == kb_at && b.kb_possible()) {
      b.kb_turn();
      continue;
    }
    if (!b.has_state()) {
      if (b.chance(0.8))
        b.request();
      else
        b.like_this();
      continue;
    }
    const double draw = b.uniform();
    if (draw < 0.35)
      b.refine();
    else if (draw < 0.65 && b.can_refer())
      b.position();
    else if (draw < 0.85)
      b.request();
    else
      b.like_this();
  }
  return b.finish("dlg-" + std::to_string(seed));
}

std::vector<DialogueRecord> generate_corpus(const Catalog& catalog, const KBStore& kb, std::uint64_t seed,
                                            std::size_t count, std::size_t n_turn_pairs, const std::string& prefix,
                                            const GeneratorOptions& opts) {
  std::vector<DialogueRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rec = generate_dialogue(catalog, kb, num::mix64(seed, i), n_turn_pairs, opts);
    rec.id = prefix + "-" + std::to_string(i);
    out.push_back(std::move(rec));
  }
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Dataset ds;
  ds.catalog = generate_catalog(spec.catalog_size, seed);
  ds.kb = generate_kb(seed, spec.celebrities);
  GeneratorOptions seen = spec.generator, held = spec.generator;
  if (spec.held_out_celebrities > 0) {
    if (spec.held_out_celebrities >= spec.celebrities)
      throw InputError("held_out_celebrities must leave at least one celebrity for training");
    std::size_t k = 0;
    for (const auto& [name, brands] : ds.kb.celebrities)
      (k++ < spec.celebrities - spec.held_out_celebrities ? seen : held).celebrities.push_back(name);
  }
  ds.train = generate_corpus(ds.catalog, ds.kb, num::mix64(seed, 1), spec.train, spec.turn_pairs, "train", seen);
  ds.valid = generate_corpus(ds.catalog, ds.kb, num::mix64(seed, 2), spec.valid, spec.turn_pairs, "valid", seen);
  ds.test = generate_corpus(ds.catalog, ds.kb, num::mix64(seed, 3), spec.test, spec.turn_pairs, "test", held);
  return ds;
}

}  // namespace slotgen::corpus

namespace slotgen::corpus {

std::vector<Tokens> reconstruct_responses(const DialogueRecord& record, const Catalog& catalog, const KBStore& kb) {
  auto fail = [&](std::size_t turn, const std::string& why) {
    return ValidationError("dialogue '" + record.id + "' turn " + std::to_string(turn + 1) + ": " + why);
  };
  auto adopt = [](SlotState& s, const CatalogItem& item) {
    s.values.clear();
    for (auto t : {SlotType::kItemType, SlotType::kColor, SlotType::kMaterial, SlotType::kBrand})
      s.values[t] = item.value(t);
  };
  std::vector<Tokens> out;
  SlotState state;
  for (std::size_t i = 0; i + 1 < record.turns.size(); i += 2) {
    const Turn& turn = record.turns[i];
    auto values = slots::extract_slot_values(TagSet::parse_all(turn.tags), turn.tokens);
    Tokens response;
    if (turn.kb_ref.rfind("query:", 0) == 0) {
      auto it = kb.queries.find(turn.kb_ref.substr(6));
      if (it == kb.queries.end()) throw fail(i, "unknown query '" + turn.kb_ref + "'");
      for (const auto& [type, value] : it->second) state.values[type] = value;
      response = ResponseRules::listing(state);
    } else if (turn.kb_ref.rfind("celebrity:", 0) == 0) {
      const std::string name = turn.kb_ref.substr(10);
      auto it = kb.celebrities.find(name);
      if (it == kb.celebrities.end()) throw fail(i, "unknown celebrity '" + name + "'");
      if (turn.tokens.front() == "will") {
        const auto brand = state.get(SlotType::kBrand);
        if (!brand) throw fail(i, "endorsement check without a brand in context");
        response = ResponseRules::endorsement_check(name, it->second, *brand);
      } else {
        response = ResponseRules::endorsements(name, it->second);
      }
    } else if (!turn.image_ids.empty()) {
      const CatalogItem* item = find_item(catalog, turn.image_ids.front());
      if (!item) throw fail(i, "attached image not in catalog");
      adopt(state, *item);
      response = ResponseRules::describe_attached(*item);
    } else if (auto pos = values.find(SlotType::kPosition); pos != values.end()) {
      const auto& positions = Attributes::positions();
      const auto idx = static_cast<std::size_t>(
          std::find(positions.begin(), positions.end(), pos->second.front()) - positions.begin());
      if (idx >= state.shown.size()) throw fail(i, "position beyond the images shown");
      const CatalogItem* item = find_item(catalog, state.shown[idx]);
      if (!item) throw fail(i, "shown image not in catalog");
      adopt(state, *item);
      response = ResponseRules::describe_position(pos->second.front(), *item);
    } else {
      if (values.count(SlotType::kItemType)) state.values.clear();
      if (values.empty()) throw fail(i, "no slot values in a constraint turn");
      for (const auto& [type, list] : values) state.values[type] = list.back();
      response = ResponseRules::listing(state);
    }
    state.shown = record.turns[i + 1].image_ids;
    out.push_back(std::move(response));
  }
  return out;
}

}  // namespace slotgen::corpus

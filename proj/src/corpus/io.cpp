// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "slotgen/corpus/corpus.hpp"
#include "slotgen/errors.hpp"

namespace slotgen::corpus {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

int parse_int(const std::string& s, std::size_t line_no, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("line " + std::to_string(line_no) + ": invalid " + what + " '" + s + "'");
  return v;
}

[[noreturn]] void invalid(const DialogueRecord& r, const std::string& why) {
  throw ValidationError("dialogue '" + r.id + "': " + why);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::size_t index_of(const std::vector<std::string>& list, const std::string& v, std::size_t line_no,
                     const char* what) {
  auto it = std::find(list.begin(), list.end(), v);
  if (it == list.end())
    throw ParseError("line " + std::to_string(line_no) + ": unknown " + what + " '" + v + "'");
  return static_cast<std::size_t>(it - list.begin());
}

}  // namespace

void validate(const DialogueRecord& r, const Catalog* catalog, const KBStore* kb) {
  if (r.id.empty() || r.id.find_first_of("\t|\n") != std::string::npos) invalid(r, "invalid id");
  if (r.turns.empty()) invalid(r, "no turns");
  for (std::size_t i = 0; i < r.turns.size(); ++i) {
    const Turn& t = r.turns[i];
    const std::string where = "turn " + std::to_string(i + 1) + ": ";
    const Role expected = i % 2 == 0 ? Role::kUser : Role::kSystem;
    if (t.role != expected) invalid(r, where + "roles must alternate starting with user");
    if (t.tokens.empty()) invalid(r, where + "empty utterance");
    for (const auto& tok : t.tokens)
      if (tok.empty() || tok.find_first_of(" \t|\n\r") != std::string::npos || tok == "-")
        invalid(r, where + "invalid token '" + tok + "'");
    if (t.image_ids.size() > kMaxImagesPerTurn)
      invalid(r, where + "more than " + std::to_string(kMaxImagesPerTurn) + " images");
    if (t.role == Role::kUser) {
      if (t.tags.size() != t.tokens.size()) invalid(r, where + "tag count does not match token count");
      for (const auto& tag : t.tags) {
        try {
          slots::TagSet::parse(tag);
        } catch (const ParseError&) {
          invalid(r, where + "unknown tag '" + tag + "'");
        }
      }
    } else if (!t.tags.empty()) {
      invalid(r, where + "system turns carry no tags");
    }
    if (catalog)
      for (int id : t.image_ids)
        if (!find_item(*catalog, id)) invalid(r, where + "image id " + std::to_string(id) + " not in catalog");
    if (!t.kb_ref.empty()) {
      if (t.kb_ref.find_first_of(" \t|\n") != std::string::npos || t.kb_ref == "-") invalid(r, where + "invalid kb ref");
      if (kb && !kb->lookup(t.kb_ref)) invalid(r, where + "unresolved kb ref '" + t.kb_ref + "'");
    }
  }
}

std::string format_record(const DialogueRecord& r) {
  std::string out = r.id + "\t" + std::to_string(r.turns.size()) + "\t";
  for (std::size_t i = 0; i < r.turns.size(); ++i) {
    const Turn& t = r.turns[i];
    if (i) out.push_back('|');
    out += role_name(t.role);
    out.push_back('\t');
    out += text::join(t.tokens);
    out.push_back('\t');
    if (t.image_ids.empty()) {
      out.push_back('-');
    } else {
      for (std::size_t k = 0; k < t.image_ids.size(); ++k) {
        if (k) out.push_back(',');
        out += std::to_string(t.image_ids[k]);
      }
    }
    out.push_back('\t');
    out += t.tags.empty() ? std::string("-") : text::join(t.tags);
    out.push_back('\t');
    out += t.kb_ref.empty() ? std::string("-") : t.kb_ref;
  }
  return out;
}

DialogueRecord parse_record(const std::string& line, std::size_t line_no) {
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("line " + std::to_string(line_no) + ": " + why);
  };
  const auto t1 = line.find('\t');
  if (t1 == std::string::npos) throw fail("missing turn count");
  const auto t2 = line.find('\t', t1 + 1);
  if (t2 == std::string::npos) throw fail("missing turns");
  DialogueRecord r;
  r.id = line.substr(0, t1);
  if (r.id.empty()) throw fail("empty dialogue id");
  const int count = parse_int(line.substr(t1 + 1, t2 - t1 - 1), line_no, "turn count");
  const auto turns = split(line.substr(t2 + 1), '|');
  if (count < 1 || static_cast<std::size_t>(count) != turns.size())
    throw fail("turn count " + std::to_string(count) + " does not match " + std::to_string(turns.size()) + " turns");
  for (const auto& raw : turns) {
    auto f = split(raw, '\t');
    if (f.size() != 5) throw fail("turn needs 5 tab-separated fields, got " + std::to_string(f.size()));
    Turn t;
    if (f[0] == "user")
      t.role = Role::kUser;
    else if (f[0] == "system")
      t.role = Role::kSystem;
    else
      throw fail("unknown role '" + f[0] + "'");
    if (f[1].empty()) throw fail("empty utterance");
    t.tokens = split(f[1], ' ');
    if (f[2] != "-")
      for (const auto& id : split(f[2], ',')) t.image_ids.push_back(parse_int(id, line_no, "image id"));
    if (f[3] != "-") t.tags = split(f[3], ' ');
    if (f[4] != "-") t.kb_ref = f[4];
    r.turns.push_back(std::move(t));
  }
  return r;
}

void write_corpus(const std::filesystem::path& path, const std::vector<DialogueRecord>& records) {
  for (const auto& r : records) validate(r);
  auto out = open_out(path);
  for (const auto& r : records) out << format_record(r) << '\n';
}

std::vector<DialogueRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  std::vector<DialogueRecord> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    ++line_no;
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) throw ParseError("line " + std::to_string(line_no) + ": truncated record (no newline)");
    auto rec = parse_record(content.substr(pos, nl - pos), line_no);
    validate(rec);
    out.push_back(std::move(rec));
    pos = nl + 1;
  }
  return out;
}

std::string format_kb(const KBStore& kb) {
  kb.validate();
  std::ostringstream out;
  for (const auto& [name, brands] : kb.celebrities) {
    out << "celebrity\t" << name << '\t';
    for (std::size_t i = 0; i < brands.size(); ++i) out << (i ? "," : "") << brands[i];
    out << '\n';
  }
  for (const auto& [key, constraints] : kb.queries) {
    out << "query\t" << key << '\t';
    for (std::size_t i = 0; i < constraints.size(); ++i)
      out << (i ? "," : "") << slots::slot_name(constraints[i].first) << '=' << constraints[i].second;
    out << '\n';
  }
  return out.str();
}

void write_kb(const std::filesystem::path& path, const KBStore& kb) {
  const std::string text = format_kb(kb);
  open_out(path) << text;
}

KBStore parse_kb(const std::string& text) {
  KBStore kb;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    auto f = split(line, '\t');
    if (f.size() != 3 || f[1].empty() || f[2].empty())
      throw ParseError("line " + std::to_string(line_no) + ": expected kind, key and values");
    if (f[0] == "celebrity") {
      kb.celebrities[f[1]] = split(f[2], ',');
    } else if (f[0] == "query") {
      auto& c = kb.queries[f[1]];
      for (const auto& kv : split(f[2], ',')) {
        const auto eq = kv.find('=');
        auto type = eq == std::string::npos ? std::nullopt : slots::parse_slot_name(kv.substr(0, eq));
        if (!type) throw ParseError("line " + std::to_string(line_no) + ": bad constraint '" + kv + "'");
        c.emplace_back(*type, kv.substr(eq + 1));
      }
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": unknown kb kind '" + f[0] + "'");
    }
  }
  kb.validate();
  return kb;
}

KBStore read_kb(const std::filesystem::path& path) { return parse_kb(read_text(path)); }

std::string format_catalog(const Catalog& catalog) {
  std::ostringstream out;
  for (const auto& item : catalog) {
    out << item.id << '\t' << Attributes::item_types()[item.item_type] << '\t' << Attributes::colors()[item.color]
        << '\t' << Attributes::materials()[item.material] << '\t' << Attributes::sizes()[item.size] << '\t'
        << Attributes::brands()[item.brand] << '\t' << Attributes::prices()[item.price] << '\n';
  }
  return out.str();
}

void write_catalog(const std::filesystem::path& path, const Catalog& catalog) {
  open_out(path) << format_catalog(catalog);
}

Catalog parse_catalog(const std::string& text) {
  Catalog catalog;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    auto f = split(line, '\t');
    if (f.size() != 7) throw ParseError("line " + std::to_string(line_no) + ": catalog rows have 7 fields");
    CatalogItem item;
    item.id = parse_int(f[0], line_no, "item id");
    item.item_type = static_cast<std::uint8_t>(index_of(Attributes::item_types(), f[1], line_no, "item type"));
    item.color = static_cast<std::uint8_t>(index_of(Attributes::colors(), f[2], line_no, "color"));
    item.material = static_cast<std::uint8_t>(index_of(Attributes::materials(), f[3], line_no, "material"));
    item.size = static_cast<std::uint8_t>(index_of(Attributes::sizes(), f[4], line_no, "size"));
    item.brand = static_cast<std::uint8_t>(index_of(Attributes::brands(), f[5], line_no, "brand"));
    item.price = static_cast<std::uint8_t>(index_of(Attributes::prices(), f[6], line_no, "price"));
    if (find_item(catalog, item.id)) throw ParseError("line " + std::to_string(line_no) + ": duplicate item id");
    catalog.push_back(item);
  }
  return catalog;
}

Catalog read_catalog(const std::filesystem::path& path) { return parse_catalog(read_text(path)); }

void Dataset::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_catalog(dir / "catalog.tsv", catalog);
  write_kb(dir / "kb.tsv", kb);
  for (const auto* split : {&train, &valid, &test})
    for (const auto& r : *split) validate(r, &catalog, &kb);
  write_corpus(dir / "train.tsv", train);
  write_corpus(dir / "valid.tsv", valid);
  write_corpus(dir / "test.tsv", test);
}

Dataset Dataset::load(const std::filesystem::path& dir) {
  Dataset ds;
  ds.catalog = read_catalog(dir / "catalog.tsv");
  ds.kb = read_kb(dir / "kb.tsv");
  ds.train = read_corpus(dir / "train.tsv");
  ds.valid = read_corpus(dir / "valid.tsv");
  ds.test = read_corpus(dir / "test.tsv");
  for (const auto* split : {&ds.train, &ds.valid, &ds.test})
    for (const auto& r : *split) validate(r, &ds.catalog, &ds.kb);
  return ds;
}

}  // namespace slotgen::corpus

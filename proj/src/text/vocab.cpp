// SPDX-License-Identifier: Apache-2.0
#include "slotgen/text/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "slotgen/errors.hpp"

namespace slotgen::text {

namespace {
const std::vector<std::string> kReservedTokens = {"<pad>", "<unk>", "<bos>", "<eos>"};
}

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(std::span<const std::string> tokens, char sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(sep);
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const auto& t : kReservedTokens) add(t);
}

void Vocabulary::add(std::string token) {
  const auto id = static_cast<TokenId>(tokens_.size());
  if (!index_.emplace(token, id).second) throw InputError("duplicate vocabulary token: " + token);
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const Tokens> corpus, std::size_t min_count) {
  if (min_count < 1) throw InputError("min_count must be >= 1");
  if (corpus.empty()) throw InputError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : corpus)
    for (const auto& t : seq) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : counts)
    if (n >= min_count && std::find(kReservedTokens.begin(), kReservedTokens.end(), tok) == kReservedTokens.end())
      ranked.emplace_back(tok, n);
  // std::map iteration is already lexicographic; stable sort keeps that as the tie-break.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [tok, n] : ranked) v.add(tok);
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kReserved || !std::equal(kReservedTokens.begin(), kReservedTokens.end(), tokens.begin()))
    throw ParseError("vocabulary must start with " + join(kReservedTokens));
  Vocabulary v;
  for (std::size_t i = kReserved; i < tokens.size(); ++i) v.add(std::move(tokens[i]));
  return v;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(tokens_.size()));
  return tokens_[static_cast<std::size_t>(id)];
}

Ids Vocabulary::encode(std::span<const std::string> tokens) const {
  Ids out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Tokens Vocabulary::decode(std::span<const TokenId> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out.push_back('\n');
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    std::string tok(text.substr(pos, nl - pos));
    if (tok.empty() || tok.find_first_of(" \t\r") != std::string::npos)
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": malformed token");
    tokens.push_back(std::move(tok));
    pos = nl + 1;
  }
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << serialize();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace slotgen::text

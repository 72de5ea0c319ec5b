// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace slotgen::text {

using TokenId = std::int64_t;
using Tokens = std::vector<std::string>;
using Ids = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kBos = 2;
inline constexpr TokenId kEos = 3;
inline constexpr std::size_t kReserved = 4;

/// Lower-cases and splits on ASCII whitespace.
Tokens tokenize(std::string_view text);
std::string join(std::span<const std::string> tokens, char sep = ' ');

/// Token <-> id bijection. Ids 0..3 are PAD, UNK, BOS, EOS.
class Vocabulary {
 public:
  Vocabulary();

  /// Tokens with frequency >= min_count, ordered by descending frequency and
  /// then lexicographically. Throws InputError on an empty corpus or
  /// min_count < 1.
  static Vocabulary build(std::span<const Tokens> corpus, std::size_t min_count);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// Unknown tokens map to UNK; BOS/EOS are never added.
  Ids encode(std::span<const std::string> tokens) const;
  Tokens decode(std::span<const TokenId> ids) const;

  /// One token per line; line number - 1 is the id.
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace slotgen::text

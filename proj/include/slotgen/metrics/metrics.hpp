// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "slotgen/text/vocab.hpp"

namespace slotgen::metrics {

using text::Tokens;

/// Corpus BLEU with uniform weights over orders 1..max_n (1 <= max_n <= 4),
/// clipped counts, brevity penalty exp(1 - r/c) for c < r, no smoothing.
/// Throws InputError on misaligned or empty corpora.
double bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, std::size_t max_n);

inline constexpr double kRougeBeta = 1.2;

/// LCS F-measure per pair, ((1 + b^2) R P) / (R + b^2 P), averaged over pairs.
double rouge_l(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);
std::size_t lcs_length(const Tokens& a, const Tokens& b);

/// Information-weighted n-gram precision with the NIST brevity penalty
/// exp(beta log^2 min(c/r, 1)), beta set so the penalty is 0.5 at c/r = 2/3.
double nist(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, std::size_t max_n = 5);
double nist_beta();

struct EvalReport {
  double bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
  double rouge_l = 0, nist = 0;
  double slot_accuracy = 0, slot_f1 = 0;
  std::size_t dialogues = 0, responses = 0, user_turns = 0;

  /// Aligned two-column table.
  std::string to_text() const;
  /// One "key=value" per line with round-trip exact numbers.
  std::string to_key_values() const;
  /// Throws ParseError on a malformed or incomplete block.
  static EvalReport parse_key_values(const std::string& text);

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Fills the generation fields from hypothesis/reference corpora.
void score_generation(EvalReport& report, const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

}  // namespace slotgen::metrics

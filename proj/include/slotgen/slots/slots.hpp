// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "slotgen/num/ops.hpp"
#include "slotgen/slots/tags.hpp"
#include "slotgen/text/vocab.hpp"

namespace slotgen::slots {

using TagSeq = std::vector<TagId>;
using SlotValues = std::map<SlotType, std::vector<std::string>>;

struct Span {
  SlotType type;
  std::size_t begin;  // inclusive
  std::size_t end;    // exclusive
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

/// An I- tag not continuing a span of the same type becomes B-.
TagSeq repair_bio(TagSeq tags);

/// Spans of a tag sequence, read with the same rule as repair_bio.
std::vector<Span> spans_of(const TagSeq& tags);
TagSeq tags_from_spans(const std::vector<Span>& spans, std::size_t length);

/// Joins each span's tokens with single spaces, grouped by type in order.
/// Throws InputError when the lengths differ.
SlotValues extract_slot_values(const TagSeq& tags, const text::Tokens& tokens);

struct SlotScores {
  double accuracy = 0.0;  // token-level exact tag match
  double f1 = 0.0;        // span-level micro F1
  std::size_t tokens = 0, gold_spans = 0, predicted_spans = 0, correct_spans = 0;
};

/// Throws InputError when the corpora or any paired sequence are misaligned.
SlotScores slot_metrics(const std::vector<TagSeq>& predicted, const std::vector<TagSeq>& gold);

/// Trainable tagging head over slot-attention outputs.
struct SlotHead {
  num::Var weight;    // 2d_h x |tags|
  num::Var bias;      // 1 x |tags|
  num::Var salience;  // 1 x |tags|, scales the attention salience into each tag's logit
};

/// Per-token tag logits: sa_output W + b + s^T u, where s_t is the mean
/// attention weight token t receives (column mean of sa_weights).
num::Var slot_logits(const num::Var& sa_output, const num::Var& sa_weights, const SlotHead& head);

struct SlotPrediction {
  num::Tensor distribution;  // T x |tags|, rows sum to 1
  num::Tensor salience;      // 1 x T
  TagSeq tags;               // argmax with BIO repair
};

SlotPrediction predict_slots(const num::Tensor& sa_output, const num::Tensor& sa_weights, const SlotHead& head);

/// "token/TAG" pairs separated by single spaces.
std::string format_tag_line(const text::Tokens& tokens, const TagSeq& tags);
std::pair<text::Tokens, TagSeq> parse_tag_line(const std::string& line);

}  // namespace slotgen::slots

// SPDX-License-Identifier: Apache-2.0
#include "slotgen/slots/slots.hpp"

#include "slotgen/errors.hpp"

namespace slotgen::slots {

TagSeq repair_bio(TagSeq tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!TagSet::is_inside(tags[i])) continue;
    const SlotType type = TagSet::type_of(tags[i]);
    const bool continues = i > 0 && tags[i - 1] != TagSet::kOutside && TagSet::type_of(tags[i - 1]) == type;
    if (!continues) tags[i] = TagSet::begin_tag(type);
  }
  return tags;
}

std::vector<Span> spans_of(const TagSeq& raw) {
  const TagSeq tags = repair_bio(raw);
  std::vector<Span> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!TagSet::is_begin(tags[i])) continue;
    const SlotType type = TagSet::type_of(tags[i]);
    std::size_t j = i + 1;
    while (j < tags.size() && tags[j] == TagSet::inside_tag(type)) ++j;
    out.push_back({type, i, j});
  }
  return out;
}

TagSeq tags_from_spans(const std::vector<Span>& spans, std::size_t length) {
  TagSeq tags(length, TagSet::kOutside);
  for (const auto& s : spans) {
    if (s.begin >= s.end || s.end > length) throw InputError("span outside sequence");
    tags[s.begin] = TagSet::begin_tag(s.type);
    for (std::size_t i = s.begin + 1; i < s.end; ++i) tags[i] = TagSet::inside_tag(s.type);
  }
  return tags;
}

SlotValues extract_slot_values(const TagSeq& tags, const text::Tokens& tokens) {
  if (tags.size() != tokens.size())
    throw InputError("extract_slot_values: " + std::to_string(tags.size()) + " tags for " +
                     std::to_string(tokens.size()) + " tokens");
  SlotValues out;
  for (const auto& s : spans_of(tags)) {
    std::string value;
    for (std::size_t i = s.begin; i < s.end; ++i) {
      if (i > s.begin) value.push_back(' ');
      value += tokens[i];
    }
    out[s.type].push_back(std::move(value));
  }
  return out;
}

SlotScores slot_metrics(const std::vector<TagSeq>& predicted, const std::vector<TagSeq>& gold) {
  if (predicted.size() != gold.size())
    throw InputError("slot_metrics: " + std::to_string(predicted.size()) + " predicted vs " +
                     std::to_string(gold.size()) + " gold sequences");
  SlotScores s;
  std::size_t matched = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (predicted[k].size() != gold[k].size())
      throw InputError("slot_metrics: sequence " + std::to_string(k) + " length mismatch");
    for (std::size_t i = 0; i < gold[k].size(); ++i) matched += predicted[k][i] == gold[k][i];
    s.tokens += gold[k].size();
    const auto g = spans_of(gold[k]);
    const auto p = spans_of(predicted[k]);
    s.gold_spans += g.size();
    s.predicted_spans += p.size();
    for (const auto& span : p)
      for (const auto& ref : g)
        if (span == ref) {
          ++s.correct_spans;
          break;
        }
  }
  s.accuracy = s.tokens ? static_cast<double>(matched) / static_cast<double>(s.tokens) : 1.0;
  const std::size_t denom = s.gold_spans + s.predicted_spans;
  s.f1 = denom ? 2.0 * static_cast<double>(s.correct_spans) / static_cast<double>(denom) : 1.0;
  return s;
}

num::Var slot_logits(const num::Var& sa_output, const num::Var& sa_weights, const SlotHead& head) {
  num::Var base = num::add(num::matmul(sa_output, head.weight), head.bias);
  num::Var salience = num::transpose(num::mean_rows(sa_weights));  // T x 1
  return num::add(base, num::matmul(salience, head.salience));
}

SlotPrediction predict_slots(const num::Tensor& sa_output, const num::Tensor& sa_weights, const SlotHead& head) {
  if (sa_weights.rows() != sa_output.rows() || sa_weights.cols() != sa_output.rows())
    throw DimensionError("predict_slots: attention weights " + num::shape_string(sa_weights.shape()) +
                         " do not match outputs " + num::shape_string(sa_output.shape()));
  num::Var out(sa_output), w(sa_weights);
  SlotPrediction p;
  p.distribution = num::softmax_values(slot_logits(out, w, head).value(), 1);
  p.salience = num::mean_rows(w).value();
  p.tags.resize(sa_output.rows());
  for (std::size_t t = 0; t < p.tags.size(); ++t) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < p.distribution.cols(); ++j)
      if (p.distribution.at(t, j) > p.distribution.at(t, best)) best = j;
    p.tags[t] = static_cast<TagId>(best);
  }
  p.tags = repair_bio(std::move(p.tags));
  return p;
}

std::string format_tag_line(const text::Tokens& tokens, const TagSeq& tags) {
  if (tokens.size() != tags.size()) throw InputError("format_tag_line: length mismatch");
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i] + "/" + TagSet::name(tags[i]);
  }
  return out;
}

std::pair<text::Tokens, TagSeq> parse_tag_line(const std::string& line) {
  std::pair<text::Tokens, TagSeq> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    auto sp = line.find(' ', pos);
    if (sp == std::string::npos) sp = line.size();
    const std::string pair = line.substr(pos, sp - pos);
    const auto slash = pair.rfind('/');
    if (slash == std::string::npos || slash == 0) throw ParseError("malformed token/TAG pair '" + pair + "'");
    out.first.push_back(pair.substr(0, slash));
    out.second.push_back(TagSet::parse(pair.substr(slash + 1)));
    pos = sp + 1;
  }
  return out;
}

}  // namespace slotgen::slots

// SPDX-License-Identifier: Apache-2.0
#include "slotgen/metrics/evaluate.hpp"

#include "slotgen/errors.hpp"

namespace slotgen::metrics {

EvalReport evaluate(const model::Model& m, std::span<const corpus::DialogueRecord> test,
                    const model::GenerationConfig& gen, std::vector<Tokens>* hypotheses) {
  if (test.empty()) throw InputError("evaluate: empty test set");
  std::vector<Tokens> hyps, refs;
  std::vector<slots::TagSeq> predicted, gold;
  for (const auto& d : test) {
    for (const auto& ids : m.respond_all(d, gen)) hyps.push_back(m.vocab().decode(ids));
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      const auto& t = d.turns[i];
      if (t.role == corpus::Role::kSystem) {
        if (i > 0) refs.push_back(t.tokens);
        continue;
      }
      predicted.push_back(m.predict_slots(t, i > 0 ? &d.turns[i - 1] : nullptr).tags);
      gold.push_back(slots::TagSet::parse_all(t.tags));
    }
  }
  if (hyps.empty()) throw InputError("evaluate: test set has no system turns");
  EvalReport r;
  score_generation(r, hyps, refs);
  const auto s = slots::slot_metrics(predicted, gold);
  r.slot_accuracy = s.accuracy;
  r.slot_f1 = s.f1;
  r.dialogues = test.size();
  r.user_turns = gold.size();
  if (hypotheses) *hypotheses = std::move(hyps);
  return r;
}

}  // namespace slotgen::metrics

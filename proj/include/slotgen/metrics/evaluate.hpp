// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "slotgen/metrics/metrics.hpp"
#include "slotgen/model/model.hpp"

namespace slotgen::metrics {

/// Decodes every system turn from its gold history and tags every user turn.
/// Throws InputError on an empty test set. `hypotheses`, when given, receives
/// the decoded responses in corpus order.
EvalReport evaluate(const model::Model& m, std::span<const corpus::DialogueRecord> test,
                    const model::GenerationConfig& gen, std::vector<Tokens>* hypotheses = nullptr);

}  // namespace slotgen::metrics

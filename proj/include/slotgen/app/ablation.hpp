// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "slotgen/corpus/corpus.hpp"
#include "slotgen/metrics/metrics.hpp"
#include "slotgen/model/config.hpp"

namespace slotgen::app {

struct AblationSwitches {
  bool sa = true, kb = true, pgpt = false;
  std::string label(model::Variant v) const;
  friend bool operator==(const AblationSwitches&, const AblationSwitches&) = default;
};

/// The 2x2x2 grid over slot attention, knowledge base and contextual embeddings.
std::vector<AblationSwitches> full_grid();

struct AblationCell {
  AblationSwitches switches;
  std::vector<metrics::EvalReport> runs;  // one per seed

  struct Stat {
    double mean = 0.0, stddev = 0.0;
  };
  /// Sample standard deviation; zero for a single run.
  Stat stat(double metrics::EvalReport::*field) const;
};

struct AblationOptions {
  std::vector<std::uint64_t> seeds;
  std::vector<AblationSwitches> cells = full_grid();
  bool score_valid = false;
  std::ostream* log = nullptr;
};

/// Trains and evaluates one model per cell and seed. Throws InputError
/// without seeds.
std::vector<AblationCell> run_ablation(const model::RunConfig& base, const corpus::Dataset& data,
                                       const AblationOptions& opts);

/// Aligned mean +- stddev table for BLEU-4, ROUGE-L, slot accuracy and F1.
std::string format_ablation(const std::vector<AblationCell>& cells, model::Variant variant);

}  // namespace slotgen::app

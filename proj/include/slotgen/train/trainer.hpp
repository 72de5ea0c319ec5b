// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "slotgen/model/model.hpp"

namespace slotgen::train {

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double valid_bleu4 = 0.0;
  double valid_slot_f1 = 0.0;
};

struct TrainOptions {
  std::ostream* log = nullptr;
  /// Decode the validation set every epoch for BLEU-4 and slot F1.
  bool score_valid = true;
  /// Called after each epoch; returning false stops training early.
  std::function<bool(const EpochStats&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_valid_loss = 0.0;
  std::size_t steps = 0;
};

/// Token-weighted joint loss over `records` without dropout.
double corpus_loss(const model::Model& m, std::span<const corpus::DialogueRecord> records);

/// Minimizes the joint loss with AdamW and global-norm clipping. Batches are
/// drawn from a per-epoch shuffle seeded by the config seed. At the end the
/// parameters of the epoch with the lowest validation loss (training loss
/// when `valid` is empty) are restored. A non-finite batch loss throws
/// NumericError naming the epoch and batch.
TrainResult train_model(model::Model& m, std::span<const corpus::DialogueRecord> train,
                        std::span<const corpus::DialogueRecord> valid, const TrainOptions& opts = {});

}  // namespace slotgen::train

// SPDX-License-Identifier: Apache-2.0
#include "slotgen/train/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "slotgen/errors.hpp"
#include "slotgen/metrics/evaluate.hpp"
#include "slotgen/num/optim.hpp"

namespace slotgen::train {

using num::Tensor;
using num::Var;

double corpus_loss(const model::Model& m, std::span<const corpus::DialogueRecord> records) {
  if (records.empty()) throw InputError("corpus_loss: no records");
  double gen = 0.0, slot = 0.0;
  std::size_t gen_tokens = 0, slot_tokens = 0;
  for (const auto& d : records) {
    auto s = m.dialogue_sums(d, false, nullptr);
    gen += s.generation.value()[0];
    gen_tokens += s.generation_tokens;
    if (s.slot) {
      slot += s.slot.value()[0];
      slot_tokens += s.slot_tokens;
    }
  }
  if (gen_tokens == 0) throw InputError("corpus_loss: no response tokens");
  double loss = gen / static_cast<double>(gen_tokens);
  if (slot_tokens) loss += m.config().slot_weight * slot / static_cast<double>(slot_tokens);
  return loss;
}

TrainResult train_model(model::Model& m, std::span<const corpus::DialogueRecord> train,
                        std::span<const corpus::DialogueRecord> valid, const TrainOptions& opts) {
  if (train.empty()) throw InputError("train: empty training set");
  const auto& cfg = m.config();
  num::AdamW opt({.lr = cfg.lr, .weight_decay = cfg.weight_decay});
  num::Rng dropout_rng(num::mix64(cfg.seed, 0x64726f70));
  TrainResult result;
  std::vector<Tensor> best;
  double best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train.size());
  std::vector<corpus::DialogueRecord> batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    num::Rng shuffle(num::mix64(cfg.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch); ++k) batch.push_back(train[order[k]]);
      const std::size_t batch_id = start / cfg.batch;
      double value;
      {
        num::Graph graph;
        Var loss = m.batch_loss(batch, true, &dropout_rng);
        value = loss.value()[0];
        if (!std::isfinite(value))
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                             std::to_string(batch_id) + " (first dialogue '" + batch.front().id + "')");
        graph.backward(loss);
      }
      m.params().clip_grad_norm(cfg.clip);
      opt.step(m.params());
      m.params().zero_grad();
      loss_sum += value;
      ++batches;
      ++result.steps;
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(batches);
    st.valid_loss = valid.empty() ? st.train_loss : corpus_loss(m, valid);
    if (!valid.empty() && opts.score_valid) {
      auto report = metrics::evaluate(m, valid, cfg.gen);
      st.valid_bleu4 = report.bleu4;
      st.valid_slot_f1 = report.slot_f1;
    }
    if (opts.log) {
      *opts.log << "epoch " << epoch << std::fixed << std::setprecision(6) << " train_loss " << st.train_loss
                << " valid_loss " << st.valid_loss << " valid_bleu4 " << st.valid_bleu4 << " valid_slot_f1 "
                << st.valid_slot_f1 << std::defaultfloat << std::endl;
    }
    result.epochs.push_back(st);
    if (st.valid_loss < best_loss) {
      best_loss = st.valid_loss;
      result.best_epoch = epoch;
      best.clear();
      for (const auto& e : m.params().entries()) best.push_back(e.var.value());
    }
    if (opts.on_epoch && !opts.on_epoch(st)) break;
  }
  if (!best.empty()) {
    const auto& entries = m.params().entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      Var v = entries[i].var;
      v.mutable_value() = best[i];
    }
  }
  result.best_valid_loss = best_loss;
  return result;
}

}  // namespace slotgen::train

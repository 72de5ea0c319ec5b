// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "slotgen/corpus/corpus.hpp"
#include "slotgen/model/config.hpp"
#include "slotgen/slots/slots.hpp"
#include "slotgen/text/embedding.hpp"

namespace slotgen::model {

struct TurnEncoding {
  Var token_states;     // T x 2d_h
  Var utterance_final;  // 1 x 2d_h
  Var sa_weights;       // T x T, only with slot attention
  Var sa_output;        // T x 2d_h, only with slot attention
  Var text_vec;         // 1 x 2d_h fed to the context encoder
  Var image_vec;        // 1 x d_h, only for multimodal variants
};

struct DialogueEncoding {
  std::vector<TurnEncoding> turns;
  Var context_states;  // N x d_h
};

struct LossParts {
  double generation = 0.0;  // mean NLL per target token
  double slot = 0.0;        // mean tag cross-entropy per user token
  std::size_t generation_tokens = 0;
  std::size_t slot_tokens = 0;
};

/// The full network for one configuration plus the data it needs at run
/// time: vocabulary, catalog (for image features) and knowledge base.
class Model {
 public:
  Model(RunConfig cfg, text::Vocabulary vocab, corpus::Catalog catalog, corpus::KBStore kb);

  const RunConfig& config() const noexcept { return cfg_; }
  const text::Vocabulary& vocab() const noexcept { return vocab_; }
  const corpus::Catalog& catalog() const noexcept { return catalog_; }
  const corpus::KBStore& kb() const noexcept { return kb_; }
  num::ParameterSet& params() noexcept { return params_; }
  const num::ParameterSet& params() const noexcept { return params_; }
  const DecoderParams& decoder() const noexcept { return dec_; }
  bool has_slot_head() const noexcept { return static_cast<bool>(slot_head_.weight); }

  /// k x d_img features for catalog ids; unknown ids throw InputError.
  Tensor image_features(std::span<const int> ids) const;
  Var embed(const text::Tokens& current, const text::Tokens* previous) const;

  TurnEncoding encode_turn(const corpus::Turn& turn, const corpus::Turn* previous, bool training,
                           num::Rng* rng) const;
  /// Encodes turns [0, count) and runs the context recurrence over them.
  DialogueEncoding encode_dialogue(std::span<const corpus::Turn> turns, bool training, num::Rng* rng) const;
  /// Zero encoding when KB is disabled or the reference does not resolve.
  KBEncoding encode_kb_ref(const std::string& ref) const;

  /// Tag logits for a user turn (requires slot attention).
  Var slot_logits(const TurnEncoding& enc) const;

  struct Sums {
    Var generation;
    std::size_t generation_tokens = 0;
    Var slot;
    std::size_t slot_tokens = 0;
  };
  /// Summed teacher-forced losses over every system turn of a dialogue.
  Sums dialogue_sums(const corpus::DialogueRecord& d, bool training, num::Rng* rng) const;

  /// Joint loss: mean generation NLL + slot_weight * mean slot cross-entropy.
  /// Throws InputError when the batch holds no target token.
  Var batch_loss(std::span<const corpus::DialogueRecord> batch, bool training, num::Rng* rng,
                 LossParts* parts = nullptr) const;

  /// Response to the last turn of `history` (a user turn).
  std::vector<TokenId> respond(std::span<const corpus::Turn> history, const GenerationConfig& gen) const;
  /// Responses for every system turn of a dialogue given gold history.
  std::vector<std::vector<TokenId>> respond_all(const corpus::DialogueRecord& d, const GenerationConfig& gen) const;

  /// Slot prediction for a user turn; all O without slot attention.
  slots::SlotPrediction predict_slots(const corpus::Turn& turn, const corpus::Turn* previous) const;

 private:
  Var text_encoder(const Var& embeds, Var* final) const;
  Var image_encoder(const corpus::Turn& turn) const;
  Var decoder_init(const DialogueEncoding& enc, std::size_t upto) const;

  RunConfig cfg_;
  text::Vocabulary vocab_;
  corpus::Catalog catalog_;
  corpus::KBStore kb_;
  std::vector<std::vector<double>> features_;  // indexed like catalog_

  num::ParameterSet params_;
  Var embed_table_;
  std::unique_ptr<text::ContextualEmbedding> contextual_;
  // recurrent text encoder
  GruParams enc_fwd_, enc_bwd_;
  // transformer text encoder
  Var enc_in_;
  std::vector<TransformerBlockParams> enc_blocks_;
  // image encoders
  Var img_weight_, img_bias_;
  Var img_in_;
  std::vector<TransformerBlockParams> img_blocks_;
  GruParams ctx_gru_;
  GruParams kb_query_, kb_entity_;
  slots::SlotHead slot_head_;
  DecoderParams dec_;
};

/// Vocabulary over every turn of `records` plus all knowledge-base tokens.
text::Vocabulary build_vocabulary(std::span<const corpus::DialogueRecord> records, const corpus::KBStore& kb,
                                  std::size_t min_count);

}  // namespace slotgen::model

// SPDX-License-Identifier: Apache-2.0
#include "slotgen/model/model.hpp"

#include <algorithm>
#include <cmath>

#include "slotgen/errors.hpp"

namespace slotgen::model {

namespace {
std::vector<std::int64_t> as_ids(const text::Ids& ids) { return {ids.begin(), ids.end()}; }
}  // namespace

Model::Model(RunConfig cfg, text::Vocabulary vocab, corpus::Catalog catalog, corpus::KBStore kb)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), catalog_(std::move(catalog)), kb_(std::move(kb)) {
  cfg_.validate();
  for (const auto& item : catalog_) features_.push_back(corpus::image_feature(item, cfg_.d_img));

  num::Rng rng(num::mix64(cfg_.seed, 0x6d6f64656cULL));
  const std::size_t d_h = cfg_.d_h, d_in = cfg_.encoder_input_dim();
  {
    Tensor table = Tensor::zeros(vocab_.size(), cfg_.d_e);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg_.d_e));
    for (auto& v : table.values()) v = rng.uniform(-bound, bound);
    embed_table_ = params_.add("embed", std::move(table));
  }
  if (cfg_.use_pgpt) contextual_ = std::make_unique<text::ContextualEmbedding>(cfg_.pgpt_dim);

  if (cfg_.transformer()) {
    enc_in_ = params_.add_uniform("enc.input", d_in, 2 * d_h, rng);
    for (std::size_t b = 0; b < cfg_.blocks; ++b)
      enc_blocks_.push_back(make_transformer_block(params_, "enc.block" + std::to_string(b), 2 * d_h, cfg_.heads, rng));
  } else {
    enc_fwd_ = make_gru(params_, "enc.fwd", d_in, d_h, rng);
    enc_bwd_ = make_gru(params_, "enc.bwd", d_in, d_h, rng);
  }
  if (cfg_.variant == Variant::kMhred) {
    img_weight_ = params_.add_uniform("img.weight", kMaxImages * cfg_.d_img, d_h, rng);
    img_bias_ = params_.add_zeros("img.bias", 1, d_h);
  } else if (cfg_.variant == Variant::kMultrans) {
    img_in_ = params_.add_uniform("img.input", cfg_.d_img, d_h, rng);
    for (std::size_t b = 0; b < cfg_.blocks; ++b)
      img_blocks_.push_back(make_transformer_block(params_, "img.block" + std::to_string(b), d_h, cfg_.heads, rng));
  }
  ctx_gru_ = make_gru(params_, "ctx.gru", 2 * d_h + (cfg_.multimodal() ? d_h : 0), d_h, rng);
  if (cfg_.use_kb) {
    kb_query_ = make_gru(params_, "kb.query", d_in, d_h, rng);
    kb_entity_ = make_gru(params_, "kb.entity", d_in, d_h, rng);
  }
  if (cfg_.use_sa) {
    slot_head_.weight = params_.add_uniform("slot.weight", 2 * d_h, slots::TagSet::kSize, rng);
    slot_head_.bias = params_.add_zeros("slot.bias", 1, slots::TagSet::kSize);
    slot_head_.salience = params_.add_zeros("slot.salience", 1, slots::TagSet::kSize);
  }
  dec_ = make_decoder(params_, embed_table_, d_h, rng);
}

Tensor Model::image_features(std::span<const int> ids) const {
  if (ids.empty()) return {};
  if (ids.size() > kMaxImages)
    throw InputError("a turn carries at most " + std::to_string(kMaxImages) + " images, got " +
                     std::to_string(ids.size()));
  Tensor out = Tensor::zeros(ids.size(), cfg_.d_img);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const corpus::CatalogItem* item = corpus::find_item(catalog_, ids[k]);
    if (!item) throw InputError("image id " + std::to_string(ids[k]) + " is not in the catalog");
    const auto& f = features_[static_cast<std::size_t>(item - catalog_.data())];
    std::copy(f.begin(), f.end(), out.data() + k * cfg_.d_img);
  }
  return out;
}

Var Model::embed(const text::Tokens& current, const text::Tokens* previous) const {
  const text::Ids ids = vocab_.encode(current);
  if (contextual_) {
    const text::Ids prev = previous ? vocab_.encode(*previous) : text::Ids{};
    return contextual_->embed(ids, prev);
  }
  const auto gather = as_ids(ids);
  return num::embedding(embed_table_, gather);
}

Var Model::text_encoder(const Var& embeds, Var* final) const {
  if (!cfg_.transformer()) {
    auto u = encode_utterance(embeds, enc_fwd_, enc_bwd_);
    *final = u.final;
    return u.token_states;
  }
  Var h = num::add(num::matmul(embeds, enc_in_), Var(sinusoidal_positions(embeds.rows(), 2 * cfg_.d_h)));
  for (const auto& block : enc_blocks_) h = transformer_block(h, block);
  *final = num::mean_rows(h);
  return h;
}

Var Model::image_encoder(const corpus::Turn& turn) const {
  const Tensor features = image_features(turn.image_ids);
  if (cfg_.variant == Variant::kMhred) return encode_images(features, img_weight_, img_bias_);
  if (features.empty()) return Var(Tensor::zeros(1, cfg_.d_h));
  Var h = num::add(num::matmul(Var(features), img_in_), Var(sinusoidal_positions(features.rows(), cfg_.d_h)));
  for (const auto& block : img_blocks_) h = transformer_block(h, block);
  return num::mean_rows(h);
}

TurnEncoding Model::encode_turn(const corpus::Turn& turn, const corpus::Turn* previous, bool training,
                                num::Rng* rng) const {
  if (turn.tokens.empty()) throw InputError("cannot encode an empty utterance");
  TurnEncoding e;
  e.token_states = text_encoder(embed(turn.tokens, previous ? &previous->tokens : nullptr), &e.utterance_final);
  if (cfg_.use_sa) {
    auto sa = slot_attention(e.token_states, cfg_.effective_dropout(), training, rng);
    e.sa_weights = sa.weights;
    e.sa_output = sa.output;
    e.text_vec = cfg_.sa_pooling == Pooling::kMean ? num::mean_rows(sa.output)
                                                   : num::row(sa.output, sa.output.rows() - 1);
  } else {
    e.text_vec = e.utterance_final;
  }
  if (cfg_.multimodal()) e.image_vec = image_encoder(turn);
  return e;
}

DialogueEncoding Model::encode_dialogue(std::span<const corpus::Turn> turns, bool training, num::Rng* rng) const {
  DialogueEncoding out;
  std::vector<Var> inputs;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    out.turns.push_back(encode_turn(turns[i], i ? &turns[i - 1] : nullptr, training, rng));
    const auto& t = out.turns.back();
    if (cfg_.multimodal()) {
      std::vector<Var> parts{t.text_vec, t.image_vec};
      inputs.push_back(num::concat_cols(parts));
    } else {
      inputs.push_back(t.text_vec);
    }
  }
  out.context_states = encode_context(inputs, ctx_gru_);
  return out;
}

KBEncoding Model::encode_kb_ref(const std::string& ref) const {
  if (!cfg_.use_kb) return empty_kb(cfg_.d_h);
  auto look = kb_.lookup(ref);
  if (!look || look->query.empty() || look->entity.empty()) return empty_kb(cfg_.d_h);
  return encode_kb(embed(look->query, nullptr), embed(look->entity, nullptr), kb_query_, kb_entity_);
}

Var Model::slot_logits(const TurnEncoding& enc) const {
  if (!has_slot_head()) throw ContractError("slot logits need slot attention");
  return slots::slot_logits(enc.sa_output, enc.sa_weights, slot_head_);
}

Var Model::decoder_init(const DialogueEncoding& enc, std::size_t upto) const {
  return num::row(enc.context_states, upto - 1);
}

Model::Sums Model::dialogue_sums(const corpus::DialogueRecord& d, bool training, num::Rng* rng) const {
  Sums s;
  auto enc = encode_dialogue(d.turns, training, rng);
  std::vector<Var> gen, slot;
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const auto& turn = d.turns[i];
    if (turn.role == corpus::Role::kSystem && i > 0) {
      DecoderContext ctx(num::slice_rows(enc.context_states, 0, i), encode_kb_ref(d.turns[i - 1].kb_ref).attended,
                         dec_);
      const auto ids = vocab_.encode(turn.tokens);
      auto nll = response_nll(ids, initial_state(decoder_init(enc, i)), ctx, dec_);
      gen.push_back(nll.total);
      s.generation_tokens += nll.count;
    } else if (turn.role == corpus::Role::kUser && has_slot_head() && cfg_.slot_loss && !turn.tags.empty()) {
      const auto tags = slots::TagSet::parse_all(turn.tags);
      std::vector<std::size_t> targets(tags.begin(), tags.end());
      slot.push_back(num::cross_entropy_rows(slot_logits(enc.turns[i]), targets));
      s.slot_tokens += targets.size();
    }
  }
  auto total = [](const std::vector<Var>& parts) {
    Var acc = parts.front();
    for (std::size_t k = 1; k < parts.size(); ++k) acc = num::add(acc, parts[k]);
    return acc;
  };
  if (!gen.empty()) s.generation = total(gen);
  if (!slot.empty()) s.slot = total(slot);
  return s;
}

Var Model::batch_loss(std::span<const corpus::DialogueRecord> batch, bool training, num::Rng* rng,
                      LossParts* parts) const {
  std::vector<Var> gen, slot;
  std::size_t gen_tokens = 0, slot_tokens = 0;
  for (const auto& d : batch) {
    auto s = dialogue_sums(d, training, rng);
    if (s.generation) gen.push_back(s.generation);
    if (s.slot) slot.push_back(s.slot);
    gen_tokens += s.generation_tokens;
    slot_tokens += s.slot_tokens;
  }
  if (gen_tokens == 0) throw InputError("batch holds no response tokens");
  auto sum_all = [](const std::vector<Var>& v) {
    Var acc = v.front();
    for (std::size_t k = 1; k < v.size(); ++k) acc = num::add(acc, v[k]);
    return acc;
  };
  Var loss = num::scale(sum_all(gen), 1.0 / static_cast<double>(gen_tokens));
  LossParts p;
  p.generation = loss.item();
  p.generation_tokens = gen_tokens;
  if (slot_tokens > 0) {
    Var slot_mean = num::scale(sum_all(slot), 1.0 / static_cast<double>(slot_tokens));
    p.slot = slot_mean.item();
    p.slot_tokens = slot_tokens;
    if (cfg_.slot_weight > 0.0) loss = num::add(loss, num::scale(slot_mean, cfg_.slot_weight));
  }
  if (parts) *parts = p;
  return loss;
}

std::vector<TokenId> Model::respond(std::span<const corpus::Turn> history, const GenerationConfig& gen) const {
  if (history.empty()) throw InputError("respond: empty history");
  auto enc = encode_dialogue(history, false, nullptr);
  const std::size_t n = history.size();
  DecoderScorer scorer(dec_, DecoderContext(enc.context_states, encode_kb_ref(history.back().kb_ref).attended, dec_),
                       decoder_init(enc, n));
  return strip_framing(beam_search(scorer, gen));
}

std::vector<std::vector<TokenId>> Model::respond_all(const corpus::DialogueRecord& d,
                                                     const GenerationConfig& gen) const {
  std::vector<std::vector<TokenId>> out;
  auto enc = encode_dialogue(d.turns, false, nullptr);
  for (std::size_t i = 1; i < d.turns.size(); ++i) {
    if (d.turns[i].role != corpus::Role::kSystem) continue;
    DecoderScorer scorer(dec_,
                         DecoderContext(num::slice_rows(enc.context_states, 0, i),
                                        encode_kb_ref(d.turns[i - 1].kb_ref).attended, dec_),
                         decoder_init(enc, i));
    out.push_back(strip_framing(beam_search(scorer, gen)));
  }
  return out;
}

slots::SlotPrediction Model::predict_slots(const corpus::Turn& turn, const corpus::Turn* previous) const {
  auto enc = encode_turn(turn, previous, false, nullptr);
  const std::size_t T = turn.tokens.size();
  if (!has_slot_head()) {
    slots::SlotPrediction p;
    p.distribution = Tensor::zeros(T, slots::TagSet::kSize);
    for (std::size_t t = 0; t < T; ++t) p.distribution.at(t, slots::TagSet::kOutside) = 1.0;
    p.salience = Tensor(num::Shape{1, T}, 1.0 / static_cast<double>(T));
    p.tags.assign(T, slots::TagSet::kOutside);
    return p;
  }
  return slots::predict_slots(enc.sa_output.value(), enc.sa_weights.value(), slot_head_);
}

text::Vocabulary build_vocabulary(std::span<const corpus::DialogueRecord> records, const corpus::KBStore& kb,
                                  std::size_t min_count) {
  std::vector<text::Tokens> corpus;
  for (const auto& r : records)
    for (const auto& t : r.turns) corpus.push_back(t.tokens);
  for (const auto& [name, brands] : kb.celebrities) {
    text::Tokens toks = text::tokenize(name);
    for (const auto& b : brands)
      for (auto& t : text::tokenize(b)) toks.push_back(std::move(t));
    corpus.push_back(std::move(toks));
  }
  for (const auto& [key, constraints] : kb.queries) {
    text::Tokens toks = text::tokenize(key);
    for (const auto& [type, value] : constraints)
      for (auto& t : text::tokenize(value)) toks.push_back(std::move(t));
    corpus.push_back(std::move(toks));
  }
  return text::Vocabulary::build(corpus, min_count);
}

}  // namespace slotgen::model

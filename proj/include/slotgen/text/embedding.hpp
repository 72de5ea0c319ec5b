// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "slotgen/num/ops.hpp"
#include "slotgen/text/vocab.hpp"

namespace slotgen::text {

enum class EmbeddingKind { kTrainable, kContextual };

/// Maps the tokens of one utterance to a T x dim matrix. `previous` is the
/// preceding turn, which only contextual providers read.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingKind kind() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;
  virtual num::Var embed(std::span<const TokenId> current, std::span<const TokenId> previous) const = 0;
};

/// Lookup into a trainable V x dim table owned by the model.
class TrainableEmbedding final : public EmbeddingProvider {
 public:
  explicit TrainableEmbedding(num::Var table) : table_(std::move(table)) {}
  EmbeddingKind kind() const noexcept override { return EmbeddingKind::kTrainable; }
  std::size_t dim() const noexcept override { return table_.cols(); }
  num::Var embed(std::span<const TokenId> current, std::span<const TokenId> previous) const override;

 private:
  num::Var table_;
};

/// Frozen stand-in for pretrained contextual embeddings.
///
/// The vector for a token is a fixed token code plus a smaller code keyed by
/// (token id, fingerprint of the previous and current id sequences), mapped
/// through a frozen random projection and L2-normalised. Identical inputs give
/// bit-identical outputs; the same token in a different context gives a
/// different but correlated vector. Never takes part in gradient flow.
class ContextualEmbedding final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDim = 768;
  static constexpr std::size_t kCodeDim = 64;
  static constexpr double kContextWeight = 0.35;

  explicit ContextualEmbedding(std::size_t dim = kDefaultDim, std::uint64_t seed = 0xd1a1096f7ULL);

  EmbeddingKind kind() const noexcept override { return EmbeddingKind::kContextual; }
  std::size_t dim() const noexcept override { return dim_; }
  num::Var embed(std::span<const TokenId> current, std::span<const TokenId> previous) const override;

  /// Same as embed, as a plain tensor. Throws InputError when `current_user`
  /// is empty.
  num::Tensor contextual_embed(std::span<const TokenId> prev_system, std::span<const TokenId> current_user) const;

  static std::uint64_t fingerprint(std::span<const TokenId> prev, std::span<const TokenId> current);

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  num::Tensor projection_;  // kCodeDim x dim
};

}  // namespace slotgen::text

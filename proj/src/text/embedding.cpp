// SPDX-License-Identifier: Apache-2.0
#include "slotgen/text/embedding.hpp"

#include <cmath>

#include "slotgen/errors.hpp"

namespace slotgen::text {

num::Var TrainableEmbedding::embed(std::span<const TokenId> current, std::span<const TokenId>) const {
  if (current.empty()) throw InputError("cannot embed an empty token sequence");
  return num::embedding(table_, current);
}

ContextualEmbedding::ContextualEmbedding(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed), projection_(num::Tensor::zeros(kCodeDim, dim)) {
  if (dim == 0) throw ConfigError("contextual embedding dim must be positive");
  num::Rng rng(num::mix64(seed, 0x70726f6aULL));
  const double s = 1.0 / std::sqrt(static_cast<double>(kCodeDim));
  for (auto& v : projection_.values()) v = rng.normal() * s;
}

std::uint64_t ContextualEmbedding::fingerprint(std::span<const TokenId> prev, std::span<const TokenId> current) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto id : prev) h = num::mix64(h, static_cast<std::uint64_t>(id));
  h = num::mix64(h, 0xffffffffffffffffULL);  // separator between the two turns
  for (auto id : current) h = num::mix64(h, static_cast<std::uint64_t>(id));
  return h;
}

num::Tensor ContextualEmbedding::contextual_embed(std::span<const TokenId> prev_system,
                                                  std::span<const TokenId> current_user) const {
  if (current_user.empty()) throw InputError("contextual_embed: current utterance is empty");
  const std::uint64_t fp = fingerprint(prev_system, current_user);
  num::Tensor out = num::Tensor::zeros(current_user.size(), dim_);
  std::vector<double> code(kCodeDim);
  for (std::size_t t = 0; t < current_user.size(); ++t) {
    const auto id = static_cast<std::uint64_t>(current_user[t]);
    num::Rng tok(num::mix64(seed_, id));
    num::Rng ctx(num::mix64(num::mix64(seed_, fp), id));
    for (auto& c : code) c = tok.normal();
    for (auto& c : code) c += kContextWeight * ctx.normal();
    double* row = out.data() + t * dim_;
    for (std::size_t k = 0; k < kCodeDim; ++k) {
      const double* pk = projection_.data() + k * dim_;
      for (std::size_t j = 0; j < dim_; ++j) row[j] += code[k] * pk[j];
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) norm += row[j] * row[j];
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < dim_; ++j) row[j] /= norm;
  }
  return out;
}

num::Var ContextualEmbedding::embed(std::span<const TokenId> current, std::span<const TokenId> previous) const {
  return num::Var(contextual_embed(previous, current));
}

}  // namespace slotgen::text

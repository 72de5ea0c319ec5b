// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "slotgen/model/decoder.hpp"

namespace slotgen::model {

enum class Variant { kHred, kMhred, kMtrans, kMultrans };
std::string_view variant_name(Variant v);
/// Throws ConfigError for an unknown name.
Variant parse_variant(std::string_view name);

enum class Pooling { kMean, kFinal };

/// Every knob of a run. Text form: one "key = value" per line, '#' starts a comment.
struct RunConfig {
  Variant variant = Variant::kMhred;
  bool use_sa = true;
  bool use_kb = true;
  bool use_pgpt = false;

  std::size_t d_h = 512;
  std::size_t d_e = 512;         // trainable word embeddings (decoder, and encoders without pgpt)
  std::size_t pgpt_dim = 768;    // contextual embedding width fed to the encoders with pgpt
  std::size_t d_img = 64;
  double dropout_sa = -1.0;      // negative: 0.3 for text-only variants, 0.5 for multimodal ones
  Pooling sa_pooling = Pooling::kMean;
  std::size_t blocks = 2;
  std::size_t heads = 4;

  std::size_t epochs = 15;
  std::size_t batch = 32;
  double lr = 1e-4;
  double weight_decay = 0.01;
  double clip = 1.0;
  bool slot_loss = true;
  double slot_weight = 1.0;
  std::size_t min_count = 1;
  std::uint64_t seed = 1;

  GenerationConfig gen;

  bool multimodal() const { return variant != Variant::kHred && variant != Variant::kMtrans; }
  bool transformer() const { return variant == Variant::kMtrans || variant == Variant::kMultrans; }
  double effective_dropout() const;
  std::size_t encoder_input_dim() const { return use_pgpt ? pgpt_dim : d_e; }

  /// Throws ConfigError naming the offending field.
  void validate() const;

  std::string serialize() const;
  /// Starts from `base` and applies every line of `text`. Unknown keys and
  /// malformed values throw ConfigError with the line number.
  static RunConfig parse(const std::string& text, const RunConfig& base);
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path, const RunConfig& base);
  static RunConfig load(const std::filesystem::path& path);
  /// Applies a single key/value pair.
  void set(const std::string& key, const std::string& value);

  friend bool operator==(const RunConfig&, const RunConfig&);
};

}  // namespace slotgen::model

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include "slotgen/model/model.hpp"

namespace slotgen::train {

inline constexpr char kCheckpointMagic[] = "SLOTGEN1";

/// Binary layout, all integers 4-byte little-endian unsigned:
///   magic "SLOTGEN1"
///   four text sections (length + bytes): config, vocabulary, catalog, kb
///   tensor count, then per tensor: name length, name, rank, dims, f32 payload
/// Parameter values are rounded to f32 before writing, so a saved model
/// and its reloaded copy compute identical outputs.
void save_checkpoint(model::Model& m, std::ostream& out);
void save_checkpoint(model::Model& m, const std::filesystem::path& path);

/// VersionError on a bad magic, missing, extra or reshaped tensors;
/// ParseError on truncation or malformed sections.
std::unique_ptr<model::Model> load_checkpoint(std::istream& in);
std::unique_ptr<model::Model> load_checkpoint(const std::filesystem::path& path);

}  // namespace slotgen::train

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slotgen::slots {

enum class SlotType : std::uint8_t { kColor, kMaterial, kItemType, kSize, kPosition, kBrand };

inline constexpr std::size_t kSlotTypeCount = 6;
inline constexpr std::array<SlotType, kSlotTypeCount> kAllSlotTypes = {
    SlotType::kColor, SlotType::kMaterial, SlotType::kItemType, SlotType::kSize, SlotType::kPosition, SlotType::kBrand};

std::string_view slot_name(SlotType t);
std::optional<SlotType> parse_slot_name(std::string_view name);

using TagId = std::int32_t;

/// BIO tag inventory: O = 0, then B-s = 1 + 2k and I-s = 2 + 2k for the k-th
/// slot type in declaration order.
struct TagSet {
  static constexpr TagId kOutside = 0;
  static constexpr std::size_t kSize = 1 + 2 * kSlotTypeCount;

  static TagId begin_tag(SlotType t) { return 1 + 2 * static_cast<TagId>(t); }
  static TagId inside_tag(SlotType t) { return 2 + 2 * static_cast<TagId>(t); }
  static bool is_begin(TagId id) { return id > 0 && id % 2 == 1; }
  static bool is_inside(TagId id) { return id > 0 && id % 2 == 0; }
  static SlotType type_of(TagId id) { return static_cast<SlotType>((id - 1) / 2); }

  static std::string name(TagId id);
  /// Throws ParseError for an unknown tag string.
  static TagId parse(std::string_view tag);
  static std::vector<TagId> parse_all(const std::vector<std::string>& tags);
  static std::vector<std::string> names(const std::vector<TagId>& ids);
};

}  // namespace slotgen::slots

// SPDX-License-Identifier: Apache-2.0
#include "slotgen/slots/tags.hpp"

#include "slotgen/errors.hpp"

namespace slotgen::slots {

namespace {
constexpr std::array<std::string_view, kSlotTypeCount> kNames = {"color", "material", "item_type",
                                                                  "size",  "position", "brand"};
}

std::string_view slot_name(SlotType t) { return kNames[static_cast<std::size_t>(t)]; }

std::optional<SlotType> parse_slot_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<SlotType>(i);
  return std::nullopt;
}

std::string TagSet::name(TagId id) {
  if (id == kOutside) return "O";
  if (id < 0 || static_cast<std::size_t>(id) >= kSize) throw InputError("tag id out of range: " + std::to_string(id));
  return std::string(is_begin(id) ? "B-" : "I-") + std::string(slot_name(type_of(id)));
}

TagId TagSet::parse(std::string_view tag) {
  if (tag == "O") return kOutside;
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    if (auto t = parse_slot_name(tag.substr(2))) return tag[0] == 'B' ? begin_tag(*t) : inside_tag(*t);
  }
  throw ParseError("unknown slot tag '" + std::string(tag) + "'");
}

std::vector<TagId> TagSet::parse_all(const std::vector<std::string>& tags) {
  std::vector<TagId> out;
  out.reserve(tags.size());
  for (const auto& t : tags) out.push_back(parse(t));
  return out;
}

std::vector<std::string> TagSet::names(const std::vector<TagId>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(name(id));
  return out;
}

}  // namespace slotgen::slots

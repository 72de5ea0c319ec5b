// SPDX-License-Identifier: Apache-2.0
#include "slotgen/app/chat.hpp"

#include <charconv>

#include "slotgen/errors.hpp"
#include "slotgen/model/encoders.hpp"

namespace slotgen::app {

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}
}  // namespace

ChatInput parse_chat_line(const std::string& raw) {
  std::string line = trim(raw);
  if (!line.empty() && line.front() == '>') line = trim(line.substr(1));
  ChatInput in;
  if (line.empty()) return in;
  if (line == "/quit") {
    in.kind = ChatInput::Kind::kQuit;
    return in;
  }
  if (line == "/reset") {
    in.kind = ChatInput::Kind::kReset;
    return in;
  }
  if (const auto open = line.rfind("[img:"); open != std::string::npos) {
    if (line.back() != ']') throw ParseError("image list must end the line as [img:ID,ID]");
    const std::string list = line.substr(open + 5, line.size() - open - 6);
    std::size_t pos = 0;
    while (pos <= list.size()) {
      const auto comma = std::min(list.find(',', pos), list.size());
      const std::string item = trim(list.substr(pos, comma - pos));
      int id = 0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), id);
      if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
        throw ParseError("invalid image id '" + item + "'");
      in.image_ids.push_back(id);
      pos = comma + 1;
    }
    line = trim(line.substr(0, open));
  }
  in.tokens = text::tokenize(line);
  in.kind = in.tokens.empty() ? ChatInput::Kind::kEmpty : ChatInput::Kind::kUtterance;
  return in;
}

std::string format_slot_values(const slots::SlotValues& values) {
  std::string out;
  for (const auto& [type, list] : values)
    for (const auto& v : list) out += (out.empty() ? "" : " ") + std::string(slots::slot_name(type)) + "=" + v;
  return out.empty() ? "(none)" : out;
}

ChatSession::Reply ChatSession::turn(const ChatInput& input) {
  Reply r;
  if (input.kind != ChatInput::Kind::kUtterance) {
    r.error = "nothing to say";
    return r;
  }
  if (input.image_ids.size() > model::kMaxImages) {
    r.error = "a turn may attach at most " + std::to_string(model::kMaxImages) + " images (got " +
              std::to_string(input.image_ids.size()) + "); turn rejected";
    return r;
  }
  corpus::Turn user;
  user.role = corpus::Role::kUser;
  user.tokens = input.tokens;
  for (int id : input.image_ids) {
    if (corpus::find_item(model_.catalog(), id))
      user.image_ids.push_back(id);
    else
      r.warnings.push_back("unknown image id " + std::to_string(id) + " ignored");
  }
  user.kb_ref = model_.kb().infer_ref(user.tokens);

  const corpus::Turn* prev = history_.empty() ? nullptr : &history_.back();
  auto pred = model_.predict_slots(user, prev);
  user.tags = slots::TagSet::names(pred.tags);
  r.tags = user.tags;
  r.slots = slots::extract_slot_values(pred.tags, user.tokens);

  history_.push_back(user);
  r.response = model_.vocab().decode(model_.respond(history_, gen_));
  corpus::Turn system;
  system.role = corpus::Role::kSystem;
  system.tokens = r.response.empty() ? text::Tokens{"..."} : r.response;
  history_.push_back(std::move(system));
  r.accepted = true;
  return r;
}

}  // namespace slotgen::app

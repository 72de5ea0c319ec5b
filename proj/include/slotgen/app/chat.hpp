// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "slotgen/model/model.hpp"

namespace slotgen::app {

struct ChatInput {
  enum class Kind { kUtterance, kReset, kQuit, kEmpty };
  Kind kind = Kind::kEmpty;
  text::Tokens tokens;
  std::vector<int> image_ids;
};

/// Parses one REPL line: "/reset", "/quit", or text with an optional
/// trailing "[img:ID,ID,...]". A leading '>' prompt marker is ignored.
/// Throws ParseError for a malformed image list.
ChatInput parse_chat_line(const std::string& line);

/// "type=value" pairs separated by spaces, "(none)" when empty.
std::string format_slot_values(const slots::SlotValues& values);

/// Turn-by-turn session over a trained model.
class ChatSession {
 public:
  ChatSession(const model::Model& m, model::GenerationConfig gen) : model_(m), gen_(gen) {}

  struct Reply {
    bool accepted = false;
    std::vector<std::string> warnings;
    std::string error;
    slots::SlotValues slots;
    text::Tokens tags;
    text::Tokens response;
  };

  /// Tags the utterance, appends it with the response to the history. More
  /// than five images reject the turn; unknown image ids are dropped with a
  /// warning.
  Reply turn(const ChatInput& input);
  void reset() { history_.clear(); }
  const std::vector<corpus::Turn>& history() const noexcept { return history_; }

 private:
  const model::Model& model_;
  model::GenerationConfig gen_;
  std::vector<corpus::Turn> history_;
};

}  // namespace slotgen::app

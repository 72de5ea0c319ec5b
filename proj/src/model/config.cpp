// SPDX-License-Identifier: Apache-2.0
#include "slotgen/model/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "slotgen/errors.hpp"

namespace slotgen::model {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kHred: return "hred";
    case Variant::kMhred: return "mhred";
    case Variant::kMtrans: return "mtrans";
    case Variant::kMultrans: return "multrans";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::kHred, Variant::kMhred, Variant::kMtrans, Variant::kMultrans})
    if (variant_name(v) == name) return v;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected hred, mhred, mtrans or multrans)");
}

double RunConfig::effective_dropout() const {
  if (dropout_sa >= 0.0) return dropout_sa;
  return multimodal() ? 0.5 : 0.3;
}

void RunConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(d_h >= 1, "d_h must be >= 1");
  need(d_e >= 1, "d_e must be >= 1");
  need(pgpt_dim >= 1, "pgpt_dim must be >= 1");
  need(d_img >= 8, "d_img must be >= 8");
  need(effective_dropout() < 1.0, "dropout_sa must be in [0, 1)");
  need(epochs >= 1, "epochs must be >= 1");
  need(batch >= 1, "batch must be >= 1");
  need(lr > 0.0 && std::isfinite(lr), "lr must be positive");
  need(weight_decay >= 0.0, "weight_decay must be >= 0");
  need(clip > 0.0, "clip must be positive");
  need(slot_weight >= 0.0, "slot_weight must be >= 0");
  need(min_count >= 1, "min_count must be >= 1");
  need(blocks >= 1, "blocks must be >= 1");
  need(heads >= 1, "heads must be >= 1");
  if (transformer()) {
    need((2 * d_h) % heads == 0, "2*d_h must be divisible by heads");
    if (variant == Variant::kMultrans) need(d_h % heads == 0, "d_h must be divisible by heads");
  }
  gen.validate();
}

namespace {
std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("invalid value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean '" + value + "' for " + key);
}
}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto size = [&] { return parse_number<std::size_t>(key, value); };
  auto real = [&] { return parse_number<double>(key, value); };
  if (key == "variant") variant = parse_variant(value);
  else if (key == "use_sa") use_sa = parse_bool(key, value);
  else if (key == "use_kb") use_kb = parse_bool(key, value);
  else if (key == "use_pgpt") use_pgpt = parse_bool(key, value);
  else if (key == "d_h") d_h = size();
  else if (key == "d_e") d_e = size();
  else if (key == "pgpt_dim") pgpt_dim = size();
  else if (key == "d_img") d_img = size();
  else if (key == "dropout_sa") dropout_sa = value == "auto" ? -1.0 : real();
  else if (key == "sa_pooling") {
    if (value == "mean") sa_pooling = Pooling::kMean;
    else if (value == "final") sa_pooling = Pooling::kFinal;
    else throw ConfigError("invalid value '" + value + "' for sa_pooling (expected mean or final)");
  }
  else if (key == "blocks") blocks = size();
  else if (key == "heads") heads = size();
  else if (key == "epochs") epochs = size();
  else if (key == "batch") batch = size();
  else if (key == "lr") lr = real();
  else if (key == "weight_decay") weight_decay = real();
  else if (key == "clip") clip = real();
  else if (key == "slot_loss") slot_loss = parse_bool(key, value);
  else if (key == "slot_weight") slot_weight = real();
  else if (key == "min_count") min_count = size();
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "max_len") gen.max_len = size();
  else if (key == "beam") gen.beam_width = size();
  else if (key == "length_alpha") gen.length_alpha = real();
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "variant = " << variant_name(variant) << '\n'
      << "use_sa = " << b(use_sa) << '\n'
      << "use_kb = " << b(use_kb) << '\n'
      << "use_pgpt = " << b(use_pgpt) << '\n'
      << "d_h = " << d_h << '\n'
      << "d_e = " << d_e << '\n'
      << "pgpt_dim = " << pgpt_dim << '\n'
      << "d_img = " << d_img << '\n'
      << "dropout_sa = " << (dropout_sa < 0 ? std::string("auto") : format_double(dropout_sa)) << '\n'
      << "sa_pooling = " << (sa_pooling == Pooling::kMean ? "mean" : "final") << '\n'
      << "blocks = " << blocks << '\n'
      << "heads = " << heads << '\n'
      << "epochs = " << epochs << '\n'
      << "batch = " << batch << '\n'
      << "lr = " << format_double(lr) << '\n'
      << "weight_decay = " << format_double(weight_decay) << '\n'
      << "clip = " << format_double(clip) << '\n'
      << "slot_loss = " << b(slot_loss) << '\n'
      << "slot_weight = " << format_double(slot_weight) << '\n'
      << "min_count = " << min_count << '\n'
      << "seed = " << seed << '\n'
      << "max_len = " << gen.max_len << '\n'
      << "beam = " << gen.beam_width << '\n'
      << "length_alpha = " << format_double(gen.length_alpha) << '\n';
  return out.str();
}

RunConfig RunConfig::parse(const std::string& text, const RunConfig& base) {
  RunConfig cfg = base;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), base);
}

RunConfig RunConfig::parse(const std::string& text) { return parse(text, RunConfig{}); }
RunConfig RunConfig::load(const std::filesystem::path& path) { return load(path, RunConfig{}); }

bool operator==(const RunConfig& a, const RunConfig& b) { return a.serialize() == b.serialize(); }

}  // namespace slotgen::model

// SPDX-License-Identifier: Apache-2.0
#include "slotgen/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "slotgen/errors.hpp"

namespace slotgen::train {

using num::Shape;
using num::Tensor;
using num::Var;

namespace {

void put_u32(std::ostream& out, std::size_t v) {
  if (v > 0xffffffffu) throw InputError("checkpoint field exceeds 32 bits");
  const auto x = static_cast<std::uint32_t>(v);
  const unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                              static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_text(std::ostream& out, const std::string& s) {
  put_u32(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void get_bytes(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw ParseError(std::string("checkpoint truncated in ") + what);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  get_bytes(in, reinterpret_cast<char*>(b), 4, what);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::string get_text(std::istream& in, const char* what) {
  const std::uint32_t n = get_u32(in, what);
  std::string s(n, '\0');
  if (n) get_bytes(in, s.data(), n, what);
  return s;
}

}  // namespace

void save_checkpoint(model::Model& m, std::ostream& out) {
  m.params().round_to_float();
  out.write(kCheckpointMagic, 8);
  put_text(out, m.config().serialize());
  put_text(out, m.vocab().serialize());
  put_text(out, corpus::format_catalog(m.catalog()));
  put_text(out, corpus::format_kb(m.kb()));
  const auto& entries = m.params().entries();
  put_u32(out, entries.size());
  for (const auto& e : entries) {
    put_text(out, e.name);
    const Tensor& t = e.var.value();
    put_u32(out, t.rank());
    for (auto d : t.shape()) put_u32(out, d);
    for (double v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw InputError("failed to write checkpoint");
}

void save_checkpoint(model::Model& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  save_checkpoint(m, out);
}

std::unique_ptr<model::Model> load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw VersionError("not a slotgen checkpoint (expected magic SLOTGEN1)");
  model::RunConfig cfg;
  try {
    cfg = model::RunConfig::parse(get_text(in, "config"));
  } catch (const ConfigError& e) {
    throw VersionError(std::string("checkpoint config is incompatible: ") + e.what());
  }
  auto vocab = text::Vocabulary::parse(get_text(in, "vocabulary"));
  auto catalog = corpus::parse_catalog(get_text(in, "catalog"));
  auto kb = corpus::parse_kb(get_text(in, "kb"));
  auto m = std::make_unique<model::Model>(cfg, std::move(vocab), std::move(catalog), std::move(kb));

  const auto& entries = m->params().entries();
  const std::uint32_t count = get_u32(in, "tensor count");
  if (count != entries.size())
    throw VersionError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                       std::to_string(entries.size()));
  for (const auto& e : entries) {
    const std::string name = get_text(in, "tensor name");
    if (name != e.name) throw VersionError("checkpoint tensor '" + name + "' where '" + e.name + "' was expected");
    const std::uint32_t rank = get_u32(in, "tensor rank");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(get_u32(in, "tensor dims"));
    Var v = e.var;
    Tensor& t = v.mutable_value();
    if (shape != t.shape()) throw VersionError("checkpoint tensor '" + name + "' has the wrong shape");
    for (double& x : t.values()) x = static_cast<double>(std::bit_cast<float>(get_u32(in, "tensor payload")));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw VersionError("trailing bytes after the last tensor");
  return m;
}

std::unique_ptr<model::Model> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return load_checkpoint(in);
}

}  // namespace slotgen::train

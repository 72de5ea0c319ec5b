// SPDX-License-Identifier: Apache-2.0
// slotgen: corpus generation, training, evaluation, slot tagging, chat and ablation.
#include <unistd.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "slotgen/app/ablation.hpp"
#include "slotgen/app/chat.hpp"
#include "slotgen/errors.hpp"
#include "slotgen/metrics/evaluate.hpp"
#include "slotgen/train/checkpoint.hpp"
#include "slotgen/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace slotgen;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kNumeric = 3 };

struct Options {
  std::string config, out, checkpoint, data, test_file, input, seeds = "1", variant;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t beam = 0, max_len = 0, epochs = 0;
  corpus::DatasetSpec spec;
};

model::RunConfig load_config(const Options& o) {
  model::RunConfig cfg = o.config.empty() ? model::RunConfig{} : model::RunConfig::load(o.config);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.epochs) cfg.epochs = o.epochs;
  if (o.beam) cfg.gen.beam_width = o.beam;
  if (o.max_len) cfg.gen.max_len = o.max_len;
  if (!o.variant.empty()) cfg.variant = model::parse_variant(o.variant);
  cfg.validate();
  return cfg;
}

model::GenerationConfig generation(const model::Model& m, const Options& o) {
  model::GenerationConfig gen = m.config().gen;
  if (o.beam) gen.beam_width = o.beam;
  if (o.max_len) gen.max_len = o.max_len;
  gen.validate();
  return gen;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw InputError("cannot write " + path.string());
}

int gen_corpus(const Options& o) {
  const auto ds = corpus::generate_dataset(o.spec, o.seed_set ? o.seed : 1);
  ds.save(o.out);
  std::cout << "wrote " << ds.train.size() << " train, " << ds.valid.size() << " valid, " << ds.test.size()
            << " test dialogues, " << ds.catalog.size() << " catalog items to " << o.out << '\n';
  return kOk;
}

int train_cmd(const Options& o) {
  const auto cfg = load_config(o);
  const auto ds = corpus::Dataset::load(o.data);
  if (ds.train.empty()) throw InputError("training split is empty");
  fs::create_directories(o.out);
  model::Model m(cfg, model::build_vocabulary(ds.train, ds.kb, cfg.min_count), ds.catalog, ds.kb);
  std::ofstream log(fs::path(o.out) / "train.log");
  std::ostringstream both;
  train::TrainOptions topt;
  topt.on_epoch = [&](const train::EpochStats& s) {
    std::ostringstream line;
    line << "epoch " << s.epoch << " train_loss " << s.train_loss << " valid_loss " << s.valid_loss
         << " valid_bleu4 " << s.valid_bleu4 << " valid_slot_f1 " << s.valid_slot_f1 << '\n';
    std::cout << line.str() << std::flush;
    log << line.str() << std::flush;
    return true;
  };
  const auto res = train::train_model(m, ds.train, ds.valid, topt);
  const fs::path ckpt = fs::path(o.out) / "model.ckpt";
  train::save_checkpoint(m, ckpt);
  write_file(fs::path(o.out) / "config.txt", cfg.serialize());
  std::cout << "best epoch " << res.best_epoch << " (valid loss " << res.best_valid_loss << "), checkpoint "
            << ckpt.string() << '\n';
  return kOk;
}

std::vector<corpus::DialogueRecord> test_records(const Options& o, const model::Model& m) {
  std::vector<corpus::DialogueRecord> recs;
  if (!o.test_file.empty())
    recs = corpus::read_corpus(o.test_file);
  else if (!o.data.empty())
    recs = corpus::read_corpus(fs::path(o.data) / "test.tsv");
  else
    throw InputError("eval needs --data DIR or --test FILE");
  for (const auto& r : recs) corpus::validate(r, &m.catalog(), &m.kb());
  if (recs.empty()) throw InputError("test corpus is empty");
  return recs;
}

int eval_cmd(const Options& o) {
  const auto m = train::load_checkpoint(o.checkpoint);
  const auto recs = test_records(o, *m);
  const auto report = metrics::evaluate(*m, recs, generation(*m, o));
  std::cout << report.to_text();
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "report.txt", report.to_text());
    write_file(fs::path(o.out) / "report.kv", report.to_key_values());
  }
  return kOk;
}

int predict_cmd(const Options& o) {
  const auto m = train::load_checkpoint(o.checkpoint);
  std::ifstream file;
  if (!o.input.empty()) {
    file.open(o.input);
    if (!file) throw InputError("cannot read " + o.input);
  }
  std::istream& in = o.input.empty() ? std::cin : file;
  std::string line;
  const corpus::Turn* prev = nullptr;
  corpus::Turn last;
  while (std::getline(in, line)) {
    auto input = app::parse_chat_line(line);
    if (input.kind != app::ChatInput::Kind::kUtterance) continue;
    corpus::Turn t;
    t.tokens = input.tokens;
    auto pred = m->predict_slots(t, prev);
    std::cout << slots::format_tag_line(t.tokens, pred.tags) << '\n'
              << "slots: " << app::format_slot_values(slots::extract_slot_values(pred.tags, t.tokens)) << '\n';
    last = std::move(t);
    prev = &last;
  }
  return kOk;
}

int chat_cmd(const Options& o) {
  const auto m = train::load_checkpoint(o.checkpoint);
  app::ChatSession session(*m, generation(*m, o));
  const bool interactive = isatty(STDIN_FILENO);
  std::string line;
  while (true) {
    if (interactive) std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    app::ChatInput input;
    try {
      input = app::parse_chat_line(line);
    } catch (const ParseError& e) {
      std::cout << "error: " << e.what() << '\n';
      continue;
    }
    if (input.kind == app::ChatInput::Kind::kQuit) break;
    if (input.kind == app::ChatInput::Kind::kEmpty) continue;
    if (input.kind == app::ChatInput::Kind::kReset) {
      session.reset();
      std::cout << "(history cleared)\n";
      continue;
    }
    const auto reply = session.turn(input);
    for (const auto& w : reply.warnings) std::cout << "warning: " << w << '\n';
    if (!reply.accepted) {
      std::cout << "error: " << reply.error << '\n';
      continue;
    }
    std::cout << "slots: " << app::format_slot_values(reply.slots) << '\n'
              << "system: " << text::join(reply.response) << '\n'
              << std::flush;
  }
  return kOk;
}

int ablate_cmd(const Options& o) {
  const auto base = load_config(o);
  const auto ds = corpus::Dataset::load(o.data);
  app::AblationOptions aopt;
  std::stringstream ss(o.seeds);
  for (std::string item; std::getline(ss, item, ',');) {
    std::uint64_t s = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), s);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      throw ConfigError("invalid seed '" + item + "' in --seeds");
    aopt.seeds.push_back(s);
  }
  aopt.log = &std::cerr;
  const auto cells = app::run_ablation(base, ds, aopt);
  const std::string table = app::format_ablation(cells, base.variant);
  std::cout << table;
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "ablation.txt", table);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"slot-aware multimodal dialogue generation"};
  cli.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* c) {
    c->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "random seed");
  };
  auto add_gen = [&](CLI::App* c) {
    c->add_option("--beam", o.beam, "beam width (1 = greedy)")->check(CLI::PositiveNumber);
    c->add_option("--max-len", o.max_len, "maximum response length")->check(CLI::PositiveNumber);
  };

  auto* gen = cli.add_subcommand("gen-corpus", "generate a synthetic dataset directory");
  gen->add_option("--out", o.out, "output directory")->required();
  add_seed(gen);
  gen->add_option("--config", o.config, "unused; accepted for uniformity");
  gen->add_option("--train", o.spec.train, "training dialogues");
  gen->add_option("--valid", o.spec.valid, "validation dialogues");
  gen->add_option("--test", o.spec.test, "test dialogues");
  gen->add_option("--turn-pairs", o.spec.turn_pairs, "user/system pairs per dialogue");
  gen->add_option("--catalog-size", o.spec.catalog_size, "catalog items");
  gen->add_option("--celebrities", o.spec.celebrities, "knowledge-base celebrities");
  gen->add_option("--held-out", o.spec.held_out_celebrities, "celebrities seen only in the test split");
  gen->add_option("--kb-rate", o.spec.generator.kb_dialogue_rate, "share of dialogues with a KB turn")
      ->check(CLI::Range(0.0, 1.0));

  auto* tr = cli.add_subcommand("train", "train a model and write a checkpoint");
  tr->add_option("--config", o.config, "run configuration file");
  tr->add_option("--data", o.data, "dataset directory")->required();
  tr->add_option("--out", o.out, "output directory")->required();
  tr->add_option("--epochs", o.epochs, "override the configured epoch count")->check(CLI::PositiveNumber);
  add_seed(tr);

  auto* ev = cli.add_subcommand("eval", "evaluate a checkpoint on a test corpus");
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  ev->add_option("--data", o.data, "dataset directory (uses test.tsv)");
  ev->add_option("--test", o.test_file, "test corpus file");
  ev->add_option("--out", o.out, "directory for report.txt and report.kv");
  add_gen(ev);

  auto* ps = cli.add_subcommand("predict-slots", "tag utterances read from a file or stdin");
  ps->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  ps->add_option("--input", o.input, "one utterance per line (default stdin)");

  auto* ch = cli.add_subcommand("chat", "interactive session");
  ch->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  add_gen(ch);

  auto* ab = cli.add_subcommand("ablate", "train and evaluate the SA x KB x P-GPT grid");
  ab->add_option("--config", o.config, "base run configuration");
  ab->add_option("--data", o.data, "dataset directory")->required();
  ab->add_option("--seeds", o.seeds, "comma-separated seeds");
  ab->add_option("--variant", o.variant, "hred, mhred, mtrans or multrans");
  ab->add_option("--out", o.out, "directory for ablation.txt");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return gen_corpus(o);
    if (*tr) return train_cmd(o);
    if (*ev) return eval_cmd(o);
    if (*ps) return predict_cmd(o);
    if (*ch) return chat_cmd(o);
    if (*ab) return ablate_cmd(o);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kUsage;
}

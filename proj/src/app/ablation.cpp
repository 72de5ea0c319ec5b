// SPDX-License-Identifier: Apache-2.0
#include "slotgen/app/ablation.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "slotgen/errors.hpp"
#include "slotgen/metrics/evaluate.hpp"
#include "slotgen/train/trainer.hpp"

namespace slotgen::app {

std::string AblationSwitches::label(model::Variant v) const {
  std::string out = pgpt ? "P-GPT + " : "";
  std::string name(model::variant_name(v));
  for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  out += name;
  if (sa) out += " + SA";
  if (kb) out += " + KB";
  return out;
}

std::vector<AblationSwitches> full_grid() {
  std::vector<AblationSwitches> out;
  for (bool pgpt : {false, true})
    for (bool kb : {false, true})
      for (bool sa : {false, true}) out.push_back({sa, kb, pgpt});
  return out;
}

AblationCell::Stat AblationCell::stat(double metrics::EvalReport::*field) const {
  Stat s;
  if (runs.empty()) return s;
  for (const auto& r : runs) s.mean += r.*field;
  s.mean /= static_cast<double>(runs.size());
  if (runs.size() > 1) {
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.*field - s.mean) * (r.*field - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(runs.size() - 1));
  }
  return s;
}

std::vector<AblationCell> run_ablation(const model::RunConfig& base, const corpus::Dataset& data,
                                       const AblationOptions& opts) {
  if (opts.seeds.empty()) throw InputError("ablation needs at least one seed");
  if (opts.cells.empty()) throw InputError("ablation needs at least one cell");
  const auto vocab = model::build_vocabulary(data.train, data.kb, base.min_count);
  std::vector<AblationCell> out;
  for (const auto& sw : opts.cells) {
    AblationCell cell{sw, {}};
    for (auto seed : opts.seeds) {
      model::RunConfig cfg = base;
      cfg.use_sa = sw.sa;
      cfg.use_kb = sw.kb;
      cfg.use_pgpt = sw.pgpt;
      cfg.seed = seed;
      model::Model m(cfg, vocab, data.catalog, data.kb);
      train::train_model(m, data.train, data.valid, {.log = nullptr, .score_valid = opts.score_valid, .on_epoch = {}});
      cell.runs.push_back(metrics::evaluate(m, data.test, cfg.gen));
      if (opts.log)
        *opts.log << sw.label(cfg.variant) << " seed " << seed << " bleu4 " << cell.runs.back().bleu4
                  << " slot_f1 " << cell.runs.back().slot_f1 << std::endl;
    }
    out.push_back(std::move(cell));
  }
  return out;
}

std::string format_ablation(const std::vector<AblationCell>& cells, model::Variant variant) {
  std::ostringstream out;
  auto pm = [](AblationCell::Stat s) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(4) << s.mean << " +- " << s.stddev;
    return o.str();
  };
  out << std::left << std::setw(28) << "model" << std::setw(20) << "bleu4" << std::setw(20) << "rouge_l"
      << std::setw(20) << "slot_accuracy" << "slot_f1" << '\n';
  for (const auto& c : cells) {
    out << std::setw(28) << c.switches.label(variant) << std::setw(20) << pm(c.stat(&metrics::EvalReport::bleu4))
        << std::setw(20) << pm(c.stat(&metrics::EvalReport::rouge_l)) << std::setw(20)
        << pm(c.stat(&metrics::EvalReport::slot_accuracy)) << pm(c.stat(&metrics::EvalReport::slot_f1)) << '\n';
  }
  return out.str();
}

}  // namespace slotgen::app

// SPDX-License-Identifier: Apache-2.0
#include "slotgen/metrics/metrics.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "slotgen/errors.hpp"

namespace slotgen::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[std::vector<std::string>(t.begin() + static_cast<long>(i),
                                                                              t.begin() + static_cast<long>(i + n))];
  return out;
}

void check_aligned(const char* what, const std::vector<Tokens>& h, const std::vector<Tokens>& r) {
  if (h.size() != r.size())
    throw InputError(std::string(what) + ": " + std::to_string(h.size()) + " hypotheses for " +
                     std::to_string(r.size()) + " references");
  if (h.empty()) throw InputError(std::string(what) + ": empty corpus");
}

}  // namespace

double bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, std::size_t max_n) {
  check_aligned("bleu", hypotheses, references);
  if (max_n < 1 || max_n > 4) throw InputError("bleu: max_n must be in 1..4");
  std::vector<std::size_t> matched(max_n + 1, 0), total(max_n + 1, 0);
  std::size_t c = 0, r = 0;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    c += hypotheses[k].size();
    r += references[k].size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto hyp = ngrams(hypotheses[k], n);
      const auto ref = ngrams(references[k], n);
      for (const auto& [g, count] : hyp) {
        total[n] += count;
        auto it = ref.find(g);
        if (it != ref.end()) matched[n] += std::min(count, it->second);
      }
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (matched[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
  check_aligned("rouge_l", hypotheses, references);
  const double b2 = kRougeBeta * kRougeBeta;
  double total = 0.0;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    const std::size_t l = lcs_length(hypotheses[k], references[k]);
    if (l == 0) continue;
    const double p = static_cast<double>(l) / static_cast<double>(hypotheses[k].size());
    const double rc = static_cast<double>(l) / static_cast<double>(references[k].size());
    total += (1.0 + b2) * rc * p / (rc + b2 * p);
  }
  return total / static_cast<double>(hypotheses.size());
}

double nist_beta() {
  const double l = std::log(1.5);
  return std::log(0.5) / (l * l);
}

double nist(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, std::size_t max_n) {
  check_aligned("nist", hypotheses, references);
  if (max_n < 1) throw InputError("nist: max_n must be >= 1");
  // Reference n-gram counts for the information weights; the empty prefix counts every reference word.
  std::vector<NgramCounts> ref_counts(max_n + 1);
  std::size_t ref_words = 0, hyp_words = 0;
  for (const auto& r : references) {
    ref_words += r.size();
    for (std::size_t n = 1; n <= max_n; ++n)
      for (const auto& [g, count] : ngrams(r, n)) ref_counts[n][g] += count;
  }
  for (const auto& h : hypotheses) hyp_words += h.size();
  auto info = [&](const std::vector<std::string>& g) {
    const double num = g.size() == 1 ? static_cast<double>(ref_words)
                                     : static_cast<double>(ref_counts[g.size() - 1].at(
                                           std::vector<std::string>(g.begin(), g.end() - 1)));
    return std::log2(num / static_cast<double>(ref_counts[g.size()].at(g)));
  };

  double score = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    double weighted = 0.0;
    std::size_t hyp_total = 0;
    for (std::size_t k = 0; k < hypotheses.size(); ++k) {
      const auto hyp = ngrams(hypotheses[k], n);
      const auto ref = ngrams(references[k], n);
      for (const auto& [g, count] : hyp) {
        hyp_total += count;
        auto it = ref.find(g);
        if (it != ref.end()) weighted += static_cast<double>(std::min(count, it->second)) * info(g);
      }
    }
    if (hyp_total > 0) score += weighted / static_cast<double>(hyp_total);
  }
  if (hyp_words == 0 || ref_words == 0) return 0.0;
  const double ratio = std::min(static_cast<double>(hyp_words) / static_cast<double>(ref_words), 1.0);
  const double lr = std::log(ratio);
  return score * std::exp(nist_beta() * lr * lr);
}

void score_generation(EvalReport& report, const std::vector<Tokens>& hypotheses,
                      const std::vector<Tokens>& references) {
  report.bleu1 = bleu(hypotheses, references, 1);
  report.bleu2 = bleu(hypotheses, references, 2);
  report.bleu3 = bleu(hypotheses, references, 3);
  report.bleu4 = bleu(hypotheses, references, 4);
  report.rouge_l = rouge_l(hypotheses, references);
  report.nist = nist(hypotheses, references);
  report.responses = hypotheses.size();
}

namespace {
struct Field {
  const char* key;
  double EvalReport::*real;
  std::size_t EvalReport::*count;
};

constexpr Field kFields[] = {
    {"bleu1", &EvalReport::bleu1, nullptr},         {"bleu2", &EvalReport::bleu2, nullptr},
    {"bleu3", &EvalReport::bleu3, nullptr},         {"bleu4", &EvalReport::bleu4, nullptr},
    {"rouge_l", &EvalReport::rouge_l, nullptr},     {"nist", &EvalReport::nist, nullptr},
    {"slot_accuracy", &EvalReport::slot_accuracy, nullptr}, {"slot_f1", &EvalReport::slot_f1, nullptr},
    {"dialogues", nullptr, &EvalReport::dialogues}, {"responses", nullptr, &EvalReport::responses},
    {"user_turns", nullptr, &EvalReport::user_turns},
};

std::string exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}
}  // namespace

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << std::left;
  for (const auto& f : kFields) {
    out << std::setw(16) << f.key;
    if (f.real)
      out << std::fixed << std::setprecision(4) << this->*f.real;
    else
      out << this->*f.count;
    out << '\n';
  }
  return out.str();
}

std::string EvalReport::to_key_values() const {
  std::string out;
  for (const auto& f : kFields)
    out += std::string(f.key) + "=" + (f.real ? exact(this->*f.real) : std::to_string(this->*f.count)) + "\n";
  return out;
}

EvalReport EvalReport::parse_key_values(const std::string& text) {
  EvalReport r;
  std::map<std::string, std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("report line " + std::to_string(line_no) + ": expected key=value");
    seen[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const auto& f : kFields) {
    auto it = seen.find(f.key);
    if (it == seen.end()) throw ParseError(std::string("report is missing ") + f.key);
    const std::string& v = it->second;
    std::errc ec;
    const char* end;
    if (f.real) {
      auto res = std::from_chars(v.data(), v.data() + v.size(), r.*f.real);
      ec = res.ec;
      end = res.ptr;
    } else {
      auto res = std::from_chars(v.data(), v.data() + v.size(), r.*f.count);
      ec = res.ec;
      end = res.ptr;
    }
    if (ec != std::errc() || end != v.data() + v.size())
      throw ParseError(std::string("report value for ") + f.key + " is not a number: '" + v + "'");
    seen.erase(it);
  }
  if (!seen.empty()) throw ParseError("report has unknown key '" + seen.begin()->first + "'");
  return r;
}

}  // namespace slotgen::metrics

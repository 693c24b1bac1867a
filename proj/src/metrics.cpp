// SPDX-License-Identifier: Apache-2.0

#include "olhtr/metrics.hpp"

#include <stdexcept>

#include "olhtr/data/utf8.hpp"

namespace olhtr::metrics {

AlignmentCounts char_counts(std::string_view ref, std::string_view hyp) {
  const std::u32string r = utf8_decode(ref), h = utf8_decode(hyp);
  return edit_align(std::span<const char32_t>(r), std::span<const char32_t>(h));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

AlignmentCounts word_counts(std::string_view ref, std::string_view hyp) {
  return edit_align(split_words(ref), split_words(hyp));
}

namespace {

template <typename F>
AlignmentCounts corpus_counts(const std::vector<std::string>& refs, const std::vector<std::string>& hyps, F counter) {
  if (refs.size() != hyps.size()) throw std::invalid_argument("metrics: reference and hypothesis counts differ");
  AlignmentCounts total;
  for (std::size_t i = 0; i < refs.size(); ++i) total += counter(refs[i], hyps[i]);
  if (total.n_ref == 0) throw std::invalid_argument("metrics: references contain no symbols");
  return total;
}

double error_rate(const AlignmentCounts& c) {
  return static_cast<double>(c.errors()) / static_cast<double>(c.n_ref);
}

}  // namespace

double cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  return error_rate(corpus_counts(refs, hyps, char_counts));
}

double wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  return error_rate(corpus_counts(refs, hyps, word_counts));
}

std::pair<double, double> ar_cr(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  const AlignmentCounts c = corpus_counts(refs, hyps, char_counts);
  const double n = static_cast<double>(c.n_ref);
  const double cr = (n - static_cast<double>(c.del) - static_cast<double>(c.sub)) / n;
  const double ar = (n - static_cast<double>(c.del) - static_cast<double>(c.sub) - static_cast<double>(c.ins)) / n;
  return {ar, cr};
}

EvalReport evaluate_transcripts(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  EvalReport r;
  r.cer = cer(refs, hyps);
  r.wer = wer(refs, hyps);
  std::tie(r.ar, r.cr) = ar_cr(refs, hyps);
  r.n_sequences = refs.size();
  for (const auto& s : refs) r.n_chars += utf8_decode(s).size();
  return r;
}

nlohmann::json to_json(const EvalReport& report) {
  return nlohmann::json{{"cer", report.cer},
                        {"wer", report.wer},
                        {"ar", report.ar},
                        {"cr", report.cr},
                        {"n_sequences", report.n_sequences},
                        {"n_chars", report.n_chars}};
}

}  // namespace olhtr::metrics

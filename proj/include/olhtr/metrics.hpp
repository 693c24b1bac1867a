// SPDX-License-Identifier: Apache-2.0
//
// Edit-distance based recognition metrics. All rates aggregate at corpus
// level: total edit operations over total reference symbols.
//
//   CER/WER = (sub + del + ins) / N
//   CR      = (N - del - sub) / N
//   AR      = (N - del - sub - ins) / N

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace olhtr::metrics {

struct AlignmentCounts {
  std::size_t n_ref = 0;
  std::size_t sub = 0;
  std::size_t del = 0;
  std::size_t ins = 0;

  std::size_t errors() const { return sub + del + ins; }
  AlignmentCounts& operator+=(const AlignmentCounts& o) {
    n_ref += o.n_ref;
    sub += o.sub;
    del += o.del;
    ins += o.ins;
    return *this;
  }
  bool operator==(const AlignmentCounts&) const = default;
};

// Unit-cost Levenshtein alignment. Among minimum-distance alignments the one
// with the fewest deletions (equivalently fewest insertions, most
// substitutions) is counted; on the backtrace substitution is preferred over
// deletion over insertion.
template <typename Sym>
AlignmentCounts edit_align(std::span<const Sym> ref, std::span<const Sym> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  using Cost = std::pair<std::size_t, std::size_t>;  // (distance, deletions)
  std::vector<Cost> cost((n + 1) * (m + 1));
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  for (std::size_t i = 0; i <= n; ++i) cost[at(i, 0)] = {i, i};
  for (std::size_t j = 0; j <= m; ++j) cost[at(0, j)] = {j, 0};
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const auto& d = cost[at(i - 1, j - 1)];
      const auto& u = cost[at(i - 1, j)];
      const auto& l = cost[at(i, j - 1)];
      Cost best{d.first + (ref[i - 1] == hyp[j - 1] ? 0 : 1), d.second};
      best = std::min(best, Cost{u.first + 1, u.second + 1});
      best = std::min(best, Cost{l.first + 1, l.second});
      cost[at(i, j)] = best;
    }
  }

  AlignmentCounts counts;
  counts.n_ref = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const Cost here = cost[at(i, j)];
    if (i > 0 && j > 0) {
      const auto& d = cost[at(i - 1, j - 1)];
      const bool same = ref[i - 1] == hyp[j - 1];
      if (Cost{d.first + (same ? 0 : 1), d.second} == here) {
        if (!same) ++counts.sub;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0) {
      const auto& u = cost[at(i - 1, j)];
      if (Cost{u.first + 1, u.second + 1} == here) {
        ++counts.del;
        --i;
        continue;
      }
    }
    ++counts.ins;
    --j;
  }
  return counts;
}

template <typename Sym>
AlignmentCounts edit_align(const std::vector<Sym>& ref, const std::vector<Sym>& hyp) {
  return edit_align(std::span<const Sym>(ref), std::span<const Sym>(hyp));
}

// Code-point level counts of two UTF-8 strings.
AlignmentCounts char_counts(std::string_view ref, std::string_view hyp);
// Word level counts; words are separated by spaces (runs of spaces collapse).
AlignmentCounts word_counts(std::string_view ref, std::string_view hyp);
std::vector<std::string> split_words(std::string_view text);

// Each rejects lists of different length or with no reference symbols.
double cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);
double wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);
std::pair<double, double> ar_cr(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);

struct EvalReport {
  double cer = 0.0;
  double wer = 0.0;
  double ar = 0.0;
  double cr = 0.0;
  std::size_t n_sequences = 0;
  std::size_t n_chars = 0;
};

EvalReport evaluate_transcripts(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);
nlohmann::json to_json(const EvalReport& report);

}  // namespace olhtr::metrics

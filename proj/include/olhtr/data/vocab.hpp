// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "olhtr/data/trajectory.hpp"

namespace olhtr::data {

// Character inventory with three reserved ids in front:
// pad = 0, sos = 1, eos = 2, then the symbols in code-point order.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kReserved = 3;

  Vocabulary() = default;
  explicit Vocabulary(std::u32string symbols);

  // Total id count including the reserved ones.
  std::size_t size() const { return symbols_.size() + kReserved; }
  const std::u32string& symbols() const { return symbols_; }

  std::vector<int> encode(std::string_view text) const;
  // Reserved ids are dropped.
  std::string decode(const std::vector<int>& ids) const;
  bool contains(char32_t c) const { return index_.count(c) != 0; }

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::u32string symbols_;
  std::unordered_map<char32_t, int> index_;
};

// Sorted unique characters of all transcripts. Control characters are
// reserved and rejected.
Vocabulary build_vocab(const std::vector<TrajectorySequence>& dataset);

}  // namespace olhtr::data

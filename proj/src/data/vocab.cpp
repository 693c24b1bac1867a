// SPDX-License-Identifier: Apache-2.0

#include "olhtr/data/vocab.hpp"

#include <algorithm>
#include <stdexcept>

#include "olhtr/data/utf8.hpp"

namespace olhtr::data {

namespace {
bool is_reserved(char32_t c) { return c < 0x20 || c == 0x7F; }
}  // namespace

Vocabulary::Vocabulary(std::u32string symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const char32_t c = symbols_[i];
    if (is_reserved(c)) throw std::invalid_argument("vocabulary: reserved control character in symbol list");
    if (!index_.emplace(c, static_cast<int>(i) + kReserved).second)
      throw std::invalid_argument("vocabulary: duplicate symbol '" + utf8_encode(c) + "'");
  }
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (char32_t c : utf8_decode(text)) {
    auto it = index_.find(c);
    if (it == index_.end()) throw std::invalid_argument("vocabulary: symbol '" + utf8_encode(c) + "' not in vocabulary");
    ids.push_back(it->second);
  }
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::u32string out;
  for (int id : ids) {
    if (id < kReserved) continue;
    if (static_cast<std::size_t>(id) >= size()) throw std::invalid_argument("vocabulary: id out of range");
    out.push_back(symbols_[static_cast<std::size_t>(id - kReserved)]);
  }
  return utf8_encode(out);
}

Vocabulary build_vocab(const std::vector<TrajectorySequence>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("build_vocab: empty dataset");
  std::u32string all;
  for (const auto& seq : dataset) {
    for (char32_t c : utf8_decode(seq.text)) {
      if (is_reserved(c)) throw std::invalid_argument("build_vocab: transcript of '" + seq.id + "' contains a reserved control character");
      all.push_back(c);
    }
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return Vocabulary(std::move(all));
}

}  // namespace olhtr::data

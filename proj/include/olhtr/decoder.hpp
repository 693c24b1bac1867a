// SPDX-License-Identifier: Apache-2.0
//
// Attention GRU decoder, one instance per stream. A step embeds the previous
// token y, attends over the encoder frames with query y + s, feeds y + a to
// the GRU cell and projects the new state to vocabulary logits.

#pragma once

#include <vector>

#include "olhtr/nn/layers.hpp"

namespace olhtr {

using ad::Tensor;

template <typename T>
struct DecoderState {
  Tensor<T> hidden;  // [1, d]
  std::size_t step = 0;
  std::vector<int> emitted;
};

// Encoder frames plus their key projection, computed once per sequence.
template <typename T>
struct DecoderMemory {
  Tensor<T> values;  // [frames, d]
  Tensor<T> keys;    // [frames, d]
};

template <typename T>
struct StepResult {
  Tensor<T> logits;         // [1, vocab]
  Tensor<T> probabilities;  // [1, vocab]
  Tensor<T> attention;      // [1, frames]
  DecoderState<T> state;
};

template <typename T>
class AttentionDecoder {
 public:
  AttentionDecoder() = default;
  AttentionDecoder(std::size_t d, std::size_t vocab_size, nn::ParamInit& init);

  std::size_t width() const { return d_; }
  std::size_t vocab_size() const { return vocab_; }

  DecoderMemory<T> prepare(const Tensor<T>& f_enc) const;
  // Zero hidden state, step 0.
  DecoderState<T> initial_state() const;

  StepResult<T> step(int prev_token, const DecoderState<T>& state, const DecoderMemory<T>& memory) const;

  // Starts from sos; stops after eos (not returned) or max_len tokens.
  // Only eos and real symbols are eligible outputs.
  std::vector<int> greedy(const Tensor<T>& f_enc, std::size_t max_len) const;

  // Teacher-forced mean cross entropy; `target` must end with eos.
  Tensor<T> loss(const Tensor<T>& f_enc, const std::vector<int>& target) const;

  void collect(ad::ParamList<T>& out, const std::string& prefix) const;

  const Tensor<T>& embedding() const { return embed_; }
  const nn::Linear<T>& query() const { return query_; }
  const nn::Linear<T>& key() const { return key_; }
  const nn::GruCell<T>& cell() const { return cell_; }
  const nn::Linear<T>& output() const { return out_; }

 private:
  // One recurrence: returns (new hidden, attention weights).
  std::pair<Tensor<T>, Tensor<T>> advance(const Tensor<T>& y, const Tensor<T>& hidden,
                                          const DecoderMemory<T>& memory) const;
  void check_token(int token) const;

  std::size_t d_ = 0;
  std::size_t vocab_ = 0;
  Tensor<T> embed_;  // [vocab, d]
  nn::Linear<T> query_, key_;
  nn::GruCell<T> cell_;
  nn::Linear<T> out_;
};

// transcript ids + eos
std::vector<int> with_eos(std::vector<int> ids);

}  // namespace olhtr

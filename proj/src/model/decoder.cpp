// SPDX-License-Identifier: Apache-2.0

#include "olhtr/decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "olhtr/data/vocab.hpp"

namespace olhtr {

using data::Vocabulary;

std::vector<int> with_eos(std::vector<int> ids) {
  ids.push_back(Vocabulary::kEos);
  return ids;
}

template <typename T>
AttentionDecoder<T>::AttentionDecoder(std::size_t d, std::size_t vocab_size, nn::ParamInit& init)
    : d_(d),
      vocab_(vocab_size),
      embed_(init.tensor<T>({vocab_size, d}, 1.0)),
      query_(d, d, init),
      key_(d, d, init),
      cell_(d, d, init),
      out_(d, vocab_size, init) {
  if (vocab_size <= static_cast<std::size_t>(Vocabulary::kReserved))
    throw std::invalid_argument("decoder: vocabulary has no symbols");
}

template <typename T>
void AttentionDecoder<T>::check_token(int token) const {
  if (token < 0 || static_cast<std::size_t>(token) >= vocab_)
    throw std::invalid_argument("decoder: token " + std::to_string(token) + " outside vocabulary of " +
                                std::to_string(vocab_));
}

template <typename T>
DecoderMemory<T> AttentionDecoder<T>::prepare(const Tensor<T>& f_enc) const {
  if (f_enc.rank() != 2 || f_enc.dim(0) == 0 || f_enc.dim(1) != d_)
    throw std::invalid_argument("decoder: expected [frames, " + std::to_string(d_) + "] features, got " +
                                ad::shape_str(f_enc.shape()));
  return {f_enc, key_(f_enc)};
}

template <typename T>
DecoderState<T> AttentionDecoder<T>::initial_state() const {
  return {Tensor<T>::zeros({1, d_}), 0, {}};
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> AttentionDecoder<T>::advance(const Tensor<T>& y, const Tensor<T>& hidden,
                                                             const DecoderMemory<T>& memory) const {
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d_)));
  Tensor<T> q = query_(ad::add(y, hidden));
  Tensor<T> weights = ad::softmax(ad::scale(ad::matmul(q, memory.keys, false, true), inv_sqrt));
  Tensor<T> context = ad::matmul(weights, memory.values);
  return {cell_.step(ad::add(y, context), hidden), weights};
}

template <typename T>
StepResult<T> AttentionDecoder<T>::step(int prev_token, const DecoderState<T>& state,
                                        const DecoderMemory<T>& memory) const {
  check_token(prev_token);
  Tensor<T> y = ad::embedding(embed_, {prev_token});
  auto [hidden, weights] = advance(y, state.hidden, memory);
  Tensor<T> logits = out_(hidden);
  StepResult<T> r{logits, ad::softmax(logits), weights, {hidden, state.step + 1, state.emitted}};
  return r;
}

template <typename T>
std::vector<int> AttentionDecoder<T>::greedy(const Tensor<T>& f_enc, std::size_t max_len) const {
  if (max_len == 0) throw std::invalid_argument("decoder: max_len must be at least 1");
  ad::NoGradGuard no_grad;
  DecoderMemory<T> memory = prepare(f_enc);
  DecoderState<T> state = initial_state();
  int prev = Vocabulary::kSos;
  while (state.emitted.size() < max_len) {
    StepResult<T> r = step(prev, state, memory);
    auto probs = r.probabilities.data();
    int best = Vocabulary::kEos;
    for (std::size_t v = Vocabulary::kReserved; v < vocab_; ++v)
      if (probs[v] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(v);
    state = std::move(r.state);
    if (best == Vocabulary::kEos) break;
    state.emitted.push_back(best);
    prev = best;
  }
  return state.emitted;
}

template <typename T>
Tensor<T> AttentionDecoder<T>::loss(const Tensor<T>& f_enc, const std::vector<int>& target) const {
  if (target.empty()) throw std::invalid_argument("decoder loss: empty target");
  if (target.back() != Vocabulary::kEos) throw std::invalid_argument("decoder loss: target must end with eos");
  for (int t : target) check_token(t);
  DecoderMemory<T> memory = prepare(f_enc);
  std::vector<int> inputs{Vocabulary::kSos};
  inputs.insert(inputs.end(), target.begin(), target.end() - 1);
  Tensor<T> embedded = ad::embedding(embed_, inputs);
  Tensor<T> hidden = Tensor<T>::zeros({1, d_});
  std::vector<Tensor<T>> states;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    hidden = advance(ad::slice(embedded, 0, t, t + 1), hidden, memory).first;
    states.push_back(hidden);
  }
  return ad::cross_entropy(out_(ad::concat(states, 0)), target);
}

template <typename T>
void AttentionDecoder<T>::collect(ad::ParamList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".embed", embed_});
  query_.collect(out, prefix + ".query");
  key_.collect(out, prefix + ".key");
  cell_.collect(out, prefix + ".cell");
  out_.collect(out, prefix + ".out");
}

template class AttentionDecoder<float>;
template class AttentionDecoder<double>;

}  // namespace olhtr

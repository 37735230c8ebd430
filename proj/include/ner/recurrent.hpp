// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

// LSTM cell and the bidirectional encoders built from it.
//
// One step of the cell, with elementwise products:
//
//     f = sigmoid(W_f h + U_f x + b_f)
//     i = sigmoid(W_i h + U_i x + b_i)
//     o = sigmoid(W_o h + U_o x + b_o)
//     g = tanh(W_c h + U_c x + b_c)
//     c' = f * c + i * g
//     h' = o * tanh(c')

#pragma once

#include "ner/features.hpp"
#include "ner/rng.hpp"
#include "ner/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ner {

template <typename Real>
using NamedTensors = std::vector<std::pair<std::string, Tensor<Real>>>;

template <typename Real>
struct LstmParams
{
    // Recurrent weights [hidden x hidden].
    Tensor<Real> w_f, w_i, w_o, w_c;
    // Input weights [hidden x input].
    Tensor<Real> u_f, u_i, u_o, u_c;
    // Biases [hidden].
    Tensor<Real> b_f, b_i, b_o, b_c;

    /// Glorot-uniform matrices, zero biases except b_f = 1.
    static auto init(std::size_t input, std::size_t hidden, Rng& rng)
      -> LstmParams;
    static auto zeros(std::size_t input, std::size_t hidden) -> LstmParams;

    [[nodiscard]] auto input_size() const -> std::size_t
    {
        return u_f.shape()[1];
    }
    [[nodiscard]] auto hidden_size() const -> std::size_t
    {
        return w_f.shape()[0];
    }

    /// 4 * (hidden*hidden + hidden*input + hidden).
    static constexpr auto parameter_count(std::size_t input, std::size_t hidden)
      -> std::size_t
    {
        return 4 * (hidden * hidden + hidden * input + hidden);
    }

    [[nodiscard]] auto named(const std::string& prefix) const -> NamedTensors<Real>;
};

template <typename Real>
struct LstmState
{
    Tensor<Real> h;
    Tensor<Real> c;

    static auto zeros(std::size_t hidden) -> LstmState
    {
        return { Tensor<Real>::zeros({ hidden }), Tensor<Real>::zeros({ hidden }) };
    }
};

template <typename Real>
struct BiLstmLayer
{
    LstmParams<Real> forward;
    LstmParams<Real> backward;

    static auto init(std::size_t input, std::size_t hidden, Rng& rng)
      -> BiLstmLayer;

    [[nodiscard]] auto output_size() const -> std::size_t
    {
        return 2 * forward.hidden_size();
    }
    [[nodiscard]] auto named(const std::string& prefix) const -> NamedTensors<Real>;
};

template <typename Real>
auto lstm_step(Tape<Real>& tape,
               const LstmParams<Real>& p,
               const Tensor<Real>& x,
               const LstmState<Real>& prev) -> LstmState<Real>;

/// Hidden states h_1..h_n from the zero state.
template <typename Real>
auto lstm_encode(Tape<Real>& tape,
                 const LstmParams<Real>& p,
                 std::span<const Tensor<Real>> seq) -> std::vector<Tensor<Real>>;

/// Position t holds [forward h_t over x_1..x_t | backward h_t over
/// x_n..x_t].
template <typename Real>
auto bilstm_encode(Tape<Real>& tape,
                   const BiLstmLayer<Real>& layer,
                   std::span<const Tensor<Real>> seq)
  -> std::vector<Tensor<Real>>;

/// Embeds the characters, applies dropout to the embeddings, runs the
/// character Bi-LSTM and returns [final forward h | final backward h].
template <typename Real>
auto char_word_vector(Tape<Real>& tape,
                      std::span<const std::size_t> chars,
                      const EmbeddingTable<Real>& char_table,
                      const BiLstmLayer<Real>& char_layer,
                      double dropout_rate,
                      bool training,
                      Rng& rng) -> Tensor<Real>;

/// Two stacked Bi-LSTM layers with dropout on the input of each.
template <typename Real>
struct WordEncoder
{
    BiLstmLayer<Real> first;
    BiLstmLayer<Real> second;
    double dropout_rate = 0.5;

    static auto init(std::size_t input,
                     std::size_t hidden,
                     double dropout_rate,
                     Rng& rng) -> WordEncoder;

    [[nodiscard]] auto output_size() const -> std::size_t
    {
        return second.output_size();
    }
};

template <typename Real>
auto encode_sentence(Tape<Real>& tape,
                     const WordEncoder<Real>& encoder,
                     std::span<const Tensor<Real>> representations,
                     bool training,
                     Rng& rng) -> std::vector<Tensor<Real>>;

} // namespace ner

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

#include "ner/recurrent.hpp"

#include "ner/errors.hpp"

#include <cmath>

namespace ner {

namespace {

template <typename Real>
auto glorot(std::size_t rows, std::size_t cols, Rng& rng) -> Tensor<Real>
{
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<Real> data(rows * cols);
    for (auto& v : data) {
        v = static_cast<Real>(rng.uniform(-bound, bound));
    }
    return { { rows, cols }, std::move(data), true };
}

template <typename Real>
auto filled(std::size_t n, Real value) -> Tensor<Real>
{
    return { { n }, std::vector<Real>(n, value), true };
}

} // namespace

template <typename Real>
auto LstmParams<Real>::init(std::size_t input, std::size_t hidden, Rng& rng)
  -> LstmParams
{
    if (input == 0 || hidden == 0) {
        throw ParameterError("LSTM sizes must be positive");
    }
    LstmParams p;
    p.w_f = glorot<Real>(hidden, hidden, rng);
    p.w_i = glorot<Real>(hidden, hidden, rng);
    p.w_o = glorot<Real>(hidden, hidden, rng);
    p.w_c = glorot<Real>(hidden, hidden, rng);
    p.u_f = glorot<Real>(hidden, input, rng);
    p.u_i = glorot<Real>(hidden, input, rng);
    p.u_o = glorot<Real>(hidden, input, rng);
    p.u_c = glorot<Real>(hidden, input, rng);
    p.b_f = filled<Real>(hidden, Real { 1 });
    p.b_i = filled<Real>(hidden, Real { 0 });
    p.b_o = filled<Real>(hidden, Real { 0 });
    p.b_c = filled<Real>(hidden, Real { 0 });
    return p;
}

template <typename Real>
auto LstmParams<Real>::zeros(std::size_t input, std::size_t hidden) -> LstmParams
{
    LstmParams p;
    for (auto* w : { &p.w_f, &p.w_i, &p.w_o, &p.w_c }) {
        *w = Tensor<Real>::zeros({ hidden, hidden }, true);
    }
    for (auto* u : { &p.u_f, &p.u_i, &p.u_o, &p.u_c }) {
        *u = Tensor<Real>::zeros({ hidden, input }, true);
    }
    for (auto* b : { &p.b_f, &p.b_i, &p.b_o, &p.b_c }) {
        *b = Tensor<Real>::zeros({ hidden }, true);
    }
    return p;
}

template <typename Real>
auto LstmParams<Real>::named(const std::string& prefix) const
  -> NamedTensors<Real>
{
    return {
        { prefix + ".W_f", w_f }, { prefix + ".W_i", w_i },
        { prefix + ".W_o", w_o }, { prefix + ".W_c", w_c },
        { prefix + ".U_f", u_f }, { prefix + ".U_i", u_i },
        { prefix + ".U_o", u_o }, { prefix + ".U_c", u_c },
        { prefix + ".b_f", b_f }, { prefix + ".b_i", b_i },
        { prefix + ".b_o", b_o }, { prefix + ".b_c", b_c },
    };
}

template <typename Real>
auto BiLstmLayer<Real>::init(std::size_t input, std::size_t hidden, Rng& rng)
  -> BiLstmLayer
{
    auto fwd = LstmParams<Real>::init(input, hidden, rng);
    auto bwd = LstmParams<Real>::init(input, hidden, rng);
    return { std::move(fwd), std::move(bwd) };
}

template <typename Real>
auto BiLstmLayer<Real>::named(const std::string& prefix) const
  -> NamedTensors<Real>
{
    auto out = forward.named(prefix + ".fwd");
    auto bwd = backward.named(prefix + ".bwd");
    out.insert(out.end(), bwd.begin(), bwd.end());
    return out;
}

template <typename Real>
auto lstm_step(Tape<Real>& tape,
               const LstmParams<Real>& p,
               const Tensor<Real>& x,
               const LstmState<Real>& prev) -> LstmState<Real>
{
    if (x.rank() != 1 || x.size() != p.input_size()) {
        throw DimensionError("lstm_step: input of shape " + shape_string(x.shape())
                             + " does not match input weights "
                             + shape_string(p.u_f.shape()));
    }
    const auto gate = [&](const Tensor<Real>& w,
                          const Tensor<Real>& u,
                          const Tensor<Real>& b) {
        return add(tape, add(tape, matmul(tape, w, prev.h), matmul(tape, u, x)), b);
    };
    const auto f = sigmoid(tape, gate(p.w_f, p.u_f, p.b_f));
    const auto i = sigmoid(tape, gate(p.w_i, p.u_i, p.b_i));
    const auto o = sigmoid(tape, gate(p.w_o, p.u_o, p.b_o));
    const auto candidate = tanh(tape, gate(p.w_c, p.u_c, p.b_c));
    auto c = add(tape, mul(tape, f, prev.c), mul(tape, i, candidate));
    auto h = mul(tape, o, tanh(tape, c));
    return { std::move(h), std::move(c) };
}

template <typename Real>
auto lstm_encode(Tape<Real>& tape,
                 const LstmParams<Real>& p,
                 std::span<const Tensor<Real>> seq) -> std::vector<Tensor<Real>>
{
    if (seq.empty()) {
        throw DimensionError("lstm_encode: empty sequence");
    }
    auto state = LstmState<Real>::zeros(p.hidden_size());
    std::vector<Tensor<Real>> out;
    out.reserve(seq.size());
    for (const auto& x : seq) {
        state = lstm_step(tape, p, x, state);
        out.push_back(state.h);
    }
    return out;
}

template <typename Real>
auto bilstm_encode(Tape<Real>& tape,
                   const BiLstmLayer<Real>& layer,
                   std::span<const Tensor<Real>> seq)
  -> std::vector<Tensor<Real>>
{
    if (seq.empty()) {
        throw DimensionError("bilstm_encode: empty sequence");
    }
    const auto fwd = lstm_encode(tape, layer.forward, seq);
    const std::vector<Tensor<Real>> reversed(seq.rbegin(), seq.rend());
    const auto bwd = lstm_encode<Real>(tape, layer.backward, reversed);
    std::vector<Tensor<Real>> out;
    out.reserve(seq.size());
    const std::size_t n = seq.size();
    for (std::size_t t = 0; t < n; ++t) {
        out.push_back(concat<Real>(tape, { fwd[t], bwd[n - 1 - t] }));
    }
    return out;
}

template <typename Real>
auto char_word_vector(Tape<Real>& tape,
                      std::span<const std::size_t> chars,
                      const EmbeddingTable<Real>& char_table,
                      const BiLstmLayer<Real>& char_layer,
                      double dropout_rate,
                      bool training,
                      Rng& rng) -> Tensor<Real>
{
    if (chars.empty()) {
        throw DimensionError("char_word_vector: empty word");
    }
    std::vector<Tensor<Real>> embedded;
    embedded.reserve(chars.size());
    for (const auto c : chars) {
        embedded.push_back(
          dropout(tape, char_table.embed(tape, c), dropout_rate, training, rng));
    }
    const auto fwd = lstm_encode<Real>(tape, char_layer.forward, embedded);
    const std::vector<Tensor<Real>> reversed(embedded.rbegin(), embedded.rend());
    const auto bwd = lstm_encode<Real>(tape, char_layer.backward, reversed);
    return concat<Real>(tape, { fwd.back(), bwd.back() });
}

template <typename Real>
auto WordEncoder<Real>::init(std::size_t input,
                             std::size_t hidden,
                             double dropout_rate,
                             Rng& rng) -> WordEncoder
{
    auto first = BiLstmLayer<Real>::init(input, hidden, rng);
    auto second = BiLstmLayer<Real>::init(2 * hidden, hidden, rng);
    return { std::move(first), std::move(second), dropout_rate };
}

template <typename Real>
auto encode_sentence(Tape<Real>& tape,
                     const WordEncoder<Real>& encoder,
                     std::span<const Tensor<Real>> representations,
                     bool training,
                     Rng& rng) -> std::vector<Tensor<Real>>
{
    if (representations.empty()) {
        throw DimensionError("encode_sentence: empty sentence");
    }
    const auto drop_all = [&](std::span<const Tensor<Real>> xs) {
        std::vector<Tensor<Real>> out;
        out.reserve(xs.size());
        for (const auto& x : xs) {
            out.push_back(dropout(tape, x, encoder.dropout_rate, training, rng));
        }
        return out;
    };
    const auto first_in = drop_all(representations);
    const auto first_out = bilstm_encode<Real>(tape, encoder.first, first_in);
    const auto second_in = drop_all(first_out);
    return bilstm_encode<Real>(tape, encoder.second, second_in);
}

#define NER_INSTANTIATE_RECURRENT(Real)                                        \
    template struct LstmParams<Real>;                                          \
    template struct BiLstmLayer<Real>;                                         \
    template struct WordEncoder<Real>;                                         \
    template auto lstm_step(Tape<Real>&,                                       \
                            const LstmParams<Real>&,                           \
                            const Tensor<Real>&,                               \
                            const LstmState<Real>&) -> LstmState<Real>;        \
    template auto lstm_encode(Tape<Real>&,                                     \
                              const LstmParams<Real>&,                         \
                              std::span<const Tensor<Real>>)                   \
      -> std::vector<Tensor<Real>>;                                            \
    template auto bilstm_encode(Tape<Real>&,                                   \
                                const BiLstmLayer<Real>&,                      \
                                std::span<const Tensor<Real>>)                 \
      -> std::vector<Tensor<Real>>;                                            \
    template auto char_word_vector(Tape<Real>&,                                \
                                   std::span<const std::size_t>,               \
                                   const EmbeddingTable<Real>&,                \
                                   const BiLstmLayer<Real>&,                   \
                                   double,                                     \
                                   bool,                                       \
                                   Rng&) -> Tensor<Real>;                      \
    template auto encode_sentence(Tape<Real>&,                                 \
                                  const WordEncoder<Real>&,                    \
                                  std::span<const Tensor<Real>>,               \
                                  bool,                                        \
                                  Rng&) -> std::vector<Tensor<Real>>;

NER_INSTANTIATE_RECURRENT(float)
NER_INSTANTIATE_RECURRENT(double)

#undef NER_INSTANTIATE_RECURRENT

} // namespace ner

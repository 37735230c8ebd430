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

#pragma once

#include "ner/data.hpp"
#include "ner/rng.hpp"
#include "ner/tensor.hpp"
#include "ner/vocab.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ner {

/// Uniform sample from the closed interval [-sqrt(3/dim), +sqrt(3/dim)].
/// The bound holds exactly after rounding to Real.
template <typename Real>
auto unk_vector(std::size_t dim, Rng& rng) -> std::vector<Real>;

template <typename Real>
class EmbeddingTable
{
public:
    EmbeddingTable() = default;
    /// Rows: UNK from unk_vector, PAD zero, regular rows uniform in the
    /// same range.
    EmbeddingTable(Vocab vocab, std::size_t dim, bool trainable, Rng& rng);
    EmbeddingTable(Vocab vocab, Tensor<Real> rows, bool trainable);

    [[nodiscard]] auto vocab() const noexcept -> const Vocab& { return vocab_; }
    [[nodiscard]] auto dim() const noexcept -> std::size_t { return dim_; }
    [[nodiscard]] auto rows() const noexcept -> const Tensor<Real>&
    {
        return rows_;
    }
    [[nodiscard]] auto rows() noexcept -> Tensor<Real>& { return rows_; }
    [[nodiscard]] auto trainable() const -> bool { return rows_.requires_grad(); }
    void set_trainable(bool flag) { rows_.set_requires_grad(flag); }

    /// Exact symbol, then its lowercase form, then UNK.
    [[nodiscard]] auto lookup_index(std::string_view symbol) const -> std::size_t;
    [[nodiscard]] auto row_values(std::size_t index) const -> std::vector<Real>;

    auto embed(Tape<Real>& tape, std::size_t index) const -> Tensor<Real>
    {
        return row(tape, rows_, index);
    }

private:
    Vocab vocab_;
    std::size_t dim_ = 0;
    Tensor<Real> rows_;
};

/// One-hot encoding over the inventory; all zeros for an unseen tag.
template <typename Real>
auto one_hot(std::string_view tag, const SymbolTable& inventory)
  -> std::vector<Real>;

/// (target, context) position pairs with 1 <= |target - context| <=
/// window, ordered by target then context.
auto skipgram_pairs(std::size_t sentence_length, std::size_t window)
  -> std::vector<std::pair<std::size_t, std::size_t>>;

struct SkipGramOptions
{
    std::size_t dim = 300;
    std::size_t epochs = 5;
    std::size_t window = 2;
    std::size_t negatives = 5;
    double learning_rate = 0.025;
    std::uint64_t seed = 1;
};

/// Skip-gram with negative sampling (unigram^0.75 noise, no frequency
/// subsampling). The learning rate decays linearly over all pairs down
/// to 1e-4 of its initial value. The vocabulary is ordered by
/// descending frequency, ties by first appearance.
template <typename Real>
auto train_skipgram(const std::vector<std::vector<std::string>>& corpus,
                    const SkipGramOptions& options) -> EmbeddingTable<Real>;

/// Splits each non-blank line on whitespace.
auto read_plain_corpus(const std::string& path)
  -> std::vector<std::vector<std::string>>;

/// Text format: "<count> <dim>" header, then one "word v1 ... vdim" line
/// per regular vocabulary entry. Values use the shortest round-trip
/// decimal form.
template <typename Real>
auto format_embeddings(const EmbeddingTable<Real>& table) -> std::string;

template <typename Real>
void write_embeddings(const EmbeddingTable<Real>& table, const std::string& path);

/// Reads the text format; UNK is regenerated from `rng`, PAD is zero.
template <typename Real>
auto read_embeddings(const std::string& path, Rng& rng) -> EmbeddingTable<Real>;

template <typename Real>
auto parse_embeddings(std::string_view text, Rng& rng) -> EmbeddingTable<Real>;

struct FeatureLayout
{
    std::size_t word_dim = 0;
    std::size_t pos_dim = 0;
    std::size_t chunk_dim = 0;
    std::size_t char_dim = 0;

    [[nodiscard]] auto total() const -> std::size_t
    {
        return word_dim + pos_dim + chunk_dim + char_dim;
    }
};

/// Concatenates [word embedding | POS one-hot | chunk one-hot | char
/// feature] for one token.
template <typename Real>
auto build_word_representation(Tape<Real>& tape,
                               const Token& token,
                               const EmbeddingTable<Real>& words,
                               const TagInventory& tags,
                               const Tensor<Real>& char_vector,
                               std::size_t char_dim) -> Tensor<Real>;

} // namespace ner

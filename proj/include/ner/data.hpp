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

// Annotated corpora in the 4-column layout
//
//     surface <TAB> POS <TAB> chunk <TAB> NER
//
// one token per line, sentences separated by blank lines. NER tags use
// IOB2 over the entity types PER, LOC, ORG and MISC.

#pragma once

#include "ner/vocab.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ner {

inline constexpr std::array<std::string_view, 4> entity_types = { "PER",
                                                                  "LOC",
                                                                  "ORG",
                                                                  "MISC" };

/// O, then B-/I- for each entity type.
auto canonical_labels() -> const std::vector<std::string>&;

/// True for "O" and for B-X / I-X with X an entity type.
auto is_iob2_tag(std::string_view tag) -> bool;

struct Token
{
    std::string surface;
    std::string pos;
    std::string chunk;
    std::string ner;

    friend auto operator==(const Token&, const Token&) -> bool = default;
};

struct Sentence
{
    std::vector<Token> tokens;

    [[nodiscard]] auto size() const noexcept -> std::size_t
    {
        return tokens.size();
    }
    [[nodiscard]] auto ner_tags() const -> std::vector<std::string>;

    friend auto operator==(const Sentence&, const Sentence&) -> bool = default;
};

struct Corpus
{
    std::vector<Sentence> sentences;
    Vocab words;
    Vocab chars;
    TagInventory tags;
    /// NER labels present, in canonical order; always contains "O".
    SymbolTable labels;
    /// One message per orphan I-X promoted to B-X while loading.
    std::vector<std::string> repairs;

    /// Builds inventories from the sentences (first-appearance order).
    static auto from_sentences(std::vector<Sentence> sentences) -> Corpus;

    [[nodiscard]] auto token_count() const -> std::size_t;
};

struct ParseOptions
{
    /// Accept 3-column lines and ignore any NER column (tagging input).
    bool ner_optional = false;
};

auto parse_conll(std::string_view text, const ParseOptions& options = {})
  -> Corpus;
auto read_conll(const std::string& path, const ParseOptions& options = {})
  -> Corpus;

auto serialize_conll(std::span<const Sentence> sentences) -> std::string;

struct BioViolation
{
    std::size_t position;
    std::string message;
};

/// Every I-X not preceded by B-X or I-X of the same type.
auto validate_bio(std::span<const std::string> tags) -> std::vector<BioViolation>;

struct Batch
{
    std::vector<std::size_t> sentence_ids;
    std::size_t max_length = 0;
    /// Row-major [sentences x max_length]; PAD beyond each length.
    std::vector<std::size_t> word_ids;
    /// 1 at valid positions, 0 at padding; same layout as word_ids.
    std::vector<std::uint8_t> mask;

    [[nodiscard]] auto token_count() const -> std::size_t;
};

/// Partitions the corpus into batches. With a seed the sentence order is
/// a Fisher-Yates permutation drawn from Rng(seed); without one, file
/// order is kept.
auto make_batches(const Corpus& corpus,
                  const Vocab& words,
                  std::size_t batch_size,
                  std::optional<std::uint64_t> shuffle_seed) -> std::vector<Batch>;

/// Template-generated corpus whose entity tags are recoverable from the
/// surface forms alone. Deterministic per seed.
auto synth_corpus(std::uint64_t seed, std::size_t n_sentences) -> Corpus;

} // namespace ner

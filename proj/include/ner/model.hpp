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

// The full tagger: per-token features -> two Bi-LSTM layers -> CRF.

#pragma once

#include "ner/config.hpp"
#include "ner/crf.hpp"
#include "ner/data.hpp"
#include "ner/eval.hpp"
#include "ner/features.hpp"
#include "ner/recurrent.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace ner {

template <typename Real>
class NerModel
{
public:
    Config config;
    TagInventory tags;
    SymbolTable labels;
    EmbeddingTable<Real> words;
    EmbeddingTable<Real> chars;
    BiLstmLayer<Real> char_layer;
    WordEncoder<Real> encoder;
    CrfParams<Real> crf;

    /// Builds vocabularies and inventories from the training corpus and
    /// initializes every parameter from `rng`. With pretrained vectors
    /// the word vocabulary is the pretrained one extended by training
    /// words it cannot resolve; those rows are freshly drawn.
    static auto create(const Config& config,
                       const Corpus& train,
                       const EmbeddingTable<Real>* pretrained,
                       Rng& rng) -> NerModel;

    [[nodiscard]] auto char_feature_size() const -> std::size_t
    {
        return char_layer.output_size();
    }
    [[nodiscard]] auto feature_size() const -> std::size_t;
    [[nodiscard]] auto encoder_output_size() const -> std::size_t
    {
        return encoder.output_size();
    }

    /// Runs one token through the network and checks the character
    /// feature is 2*hidden_char long and the encoder output is
    /// 2*hidden_word long. Throws DimensionError otherwise.
    void check_shapes() const;

    /// Every parameter tensor with a stable name, in a fixed order.
    [[nodiscard]] auto named_parameters() const -> NamedTensors<Real>;
    /// Parameters that receive updates (frozen embeddings excluded).
    [[nodiscard]] auto trainable_parameters() const -> std::vector<Tensor<Real>>;

    [[nodiscard]] auto char_indices(const std::string& surface) const
      -> std::vector<std::size_t>;
    /// Label indices; ValidationError for labels the model does not know.
    [[nodiscard]] auto label_indices(const Sentence& sentence) const
      -> std::vector<std::size_t>;

    auto sentence_emissions(Tape<Real>& tape,
                            const Sentence& sentence,
                            bool training,
                            Rng& rng) const -> Tensor<Real>;

    /// CRF negative log-likelihood of the gold labels.
    auto sentence_loss(Tape<Real>& tape,
                       const Sentence& sentence,
                       bool training,
                       Rng& rng) const -> Tensor<Real>;

    [[nodiscard]] auto predict(const Sentence& sentence) const
      -> std::vector<std::string>;
};

/// ValidationError naming the first label of `corpus` unknown to the
/// model.
template <typename Real>
void check_label_inventory(const NerModel<Real>& model, const Corpus& corpus);

template <typename Real>
auto predict_corpus(const NerModel<Real>& model, const Corpus& corpus)
  -> TagSequences;

template <typename Real>
auto evaluate(const NerModel<Real>& model, const Corpus& corpus) -> MetricsReport;

/// Mean NLL per token in inference mode.
template <typename Real>
auto mean_token_loss(const NerModel<Real>& model, const Corpus& corpus) -> double;

/// Rewrites a 3- or 4-column file with predicted tags in column 4,
/// preserving the line structure (same number of lines).
template <typename Real>
auto tag_conll_text(const NerModel<Real>& model, std::string_view text)
  -> std::string;

} // namespace ner

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

#include "ner/model.hpp"

#include "ner/errors.hpp"

namespace ner {

template <typename Real>
auto NerModel<Real>::create(const Config& config,
                            const Corpus& train,
                            const EmbeddingTable<Real>* pretrained,
                            Rng& rng) -> NerModel
{
    config.validate();
    NerModel m;
    m.config = config;
    m.tags = train.tags;
    m.labels = train.labels;
    if (m.labels.empty()) {
        m.labels.add("O");
    }

    if (pretrained != nullptr) {
        if (pretrained->dim() != config.word_dim) {
            throw DimensionError("pretrained vectors have dimension "
                                 + std::to_string(pretrained->dim())
                                 + ", config word_dim is "
                                 + std::to_string(config.word_dim));
        }
        Vocab vocab = pretrained->vocab();
        for (std::size_t r = 2; r < train.words.size(); ++r) {
            const auto& w = train.words.symbol(r);
            if (pretrained->lookup_index(w) == Vocab::unk) {
                vocab.add(w);
            }
        }
        const auto old_rows = pretrained->rows().data();
        std::vector<Real> data(old_rows.begin(), old_rows.end());
        for (std::size_t r = pretrained->vocab().size(); r < vocab.size(); ++r) {
            const auto v = unk_vector<Real>(config.word_dim, rng);
            data.insert(data.end(), v.begin(), v.end());
        }
        Tensor<Real> rows { { vocab.size(), config.word_dim }, std::move(data) };
        m.words = EmbeddingTable<Real>(
          std::move(vocab), std::move(rows), !config.freeze_embeddings);
    } else {
        m.words = EmbeddingTable<Real>(train.words, config.word_dim, true, rng);
    }
    m.chars = EmbeddingTable<Real>(train.chars, config.char_dim, true, rng);
    m.char_layer = BiLstmLayer<Real>::init(config.char_dim, config.hidden_char, rng);
    m.encoder = WordEncoder<Real>::init(
      m.feature_size(), config.hidden_word, config.dropout_bilstm, rng);
    m.crf = CrfParams<Real>::init(m.encoder.output_size(), m.labels.size(), rng);
    m.check_shapes();
    return m;
}

template <typename Real>
auto NerModel<Real>::feature_size() const -> std::size_t
{
    return FeatureLayout { words.dim(),
                           tags.pos.size(),
                           tags.chunk.size(),
                           char_feature_size() }
      .total();
}

template <typename Real>
void NerModel<Real>::check_shapes() const
{
    Tape<Real> tape { Tape<Real>::Mode::inference };
    Rng rng { 0 };
    const Token probe { "a", "", "", "O" };
    const auto ids = char_indices(probe.surface);
    const auto cv = char_word_vector(
      tape, ids, chars, char_layer, config.dropout_char, false, rng);
    if (cv.size() != 2 * config.hidden_char) {
        throw DimensionError("character feature has length "
                             + std::to_string(cv.size()) + ", expected "
                             + std::to_string(2 * config.hidden_char));
    }
    const auto rep = build_word_representation(
      tape, probe, words, tags, cv, char_feature_size());
    if (rep.size() != feature_size()) {
        throw DimensionError("word representation has length "
                             + std::to_string(rep.size()));
    }
    const std::vector<Tensor<Real>> seq { rep };
    const auto enc = encode_sentence<Real>(tape, encoder, seq, false, rng);
    if (enc.front().size() != 2 * config.hidden_word) {
        throw DimensionError("encoder output has length "
                             + std::to_string(enc.front().size())
                             + ", expected "
                             + std::to_string(2 * config.hidden_word));
    }
}

template <typename Real>
auto NerModel<Real>::named_parameters() const -> NamedTensors<Real>
{
    NamedTensors<Real> out;
    out.emplace_back("word_embedding", words.rows());
    out.emplace_back("char_embedding", chars.rows());
    const auto append = [&](NamedTensors<Real> more) {
        out.insert(out.end(), more.begin(), more.end());
    };
    append(char_layer.named("char_lstm"));
    append(encoder.first.named("word_lstm1"));
    append(encoder.second.named("word_lstm2"));
    append(crf.named("crf"));
    return out;
}

template <typename Real>
auto NerModel<Real>::trainable_parameters() const -> std::vector<Tensor<Real>>
{
    std::vector<Tensor<Real>> out;
    for (const auto& [name, t] : named_parameters()) {
        if (t.requires_grad()) {
            out.push_back(t);
        }
    }
    return out;
}

template <typename Real>
auto NerModel<Real>::char_indices(const std::string& surface) const
  -> std::vector<std::size_t>
{
    std::vector<std::size_t> ids;
    for (const auto& c : utf8::characters(surface)) {
        ids.push_back(chars.vocab().index(c));
    }
    return ids;
}

template <typename Real>
auto NerModel<Real>::label_indices(const Sentence& sentence) const
  -> std::vector<std::size_t>
{
    std::vector<std::size_t> out;
    out.reserve(sentence.size());
    for (const auto& t : sentence.tokens) {
        const auto idx = labels.find(t.ner);
        if (!idx) {
            throw ValidationError("label '" + t.ner
                                  + "' is not in the model's tag inventory");
        }
        out.push_back(*idx);
    }
    return out;
}

template <typename Real>
auto NerModel<Real>::sentence_emissions(Tape<Real>& tape,
                                        const Sentence& sentence,
                                        bool training,
                                        Rng& rng) const -> Tensor<Real>
{
    std::vector<Tensor<Real>> reps;
    reps.reserve(sentence.size());
    for (const auto& token : sentence.tokens) {
        const auto ids = char_indices(token.surface);
        const auto cv = char_word_vector(
          tape, ids, chars, char_layer, config.dropout_char, training, rng);
        reps.push_back(build_word_representation(
          tape, token, words, tags, cv, char_feature_size()));
    }
    const auto encoded = encode_sentence<Real>(tape, encoder, reps, training, rng);
    return emissions<Real>(tape, crf, encoded);
}

template <typename Real>
auto NerModel<Real>::sentence_loss(Tape<Real>& tape,
                                   const Sentence& sentence,
                                   bool training,
                                   Rng& rng) const -> Tensor<Real>
{
    const auto gold = label_indices(sentence);
    const auto e = sentence_emissions(tape, sentence, training, rng);
    return nll_loss<Real>(tape, e, gold, crf);
}

template <typename Real>
auto NerModel<Real>::predict(const Sentence& sentence) const
  -> std::vector<std::string>
{
    if (sentence.tokens.empty()) {
        return {};
    }
    Tape<Real> tape { Tape<Real>::Mode::inference };
    Rng rng { 0 };
    const auto e = sentence_emissions(tape, sentence, false, rng);
    const auto decoded = viterbi_decode(e, crf);
    std::vector<std::string> out;
    out.reserve(decoded.tags.size());
    for (const auto t : decoded.tags) {
        out.push_back(labels.symbol(t));
    }
    return out;
}

template <typename Real>
void check_label_inventory(const NerModel<Real>& model, const Corpus& corpus)
{
    for (const auto& label : corpus.labels.symbols()) {
        if (!model.labels.contains(label)) {
            throw ValidationError("corpus label '" + label
                                  + "' is not in the checkpoint's tag inventory");
        }
    }
}

template <typename Real>
auto predict_corpus(const NerModel<Real>& model, const Corpus& corpus)
  -> TagSequences
{
    TagSequences out;
    out.reserve(corpus.sentences.size());
    for (const auto& s : corpus.sentences) {
        out.push_back(model.predict(s));
    }
    return out;
}

template <typename Real>
auto evaluate(const NerModel<Real>& model, const Corpus& corpus) -> MetricsReport
{
    check_label_inventory(model, corpus);
    TagSequences gold;
    gold.reserve(corpus.sentences.size());
    for (const auto& s : corpus.sentences) {
        gold.push_back(s.ner_tags());
    }
    return f1_report(gold, predict_corpus(model, corpus));
}

template <typename Real>
auto mean_token_loss(const NerModel<Real>& model, const Corpus& corpus) -> double
{
    double total = 0.0;
    std::size_t tokens = 0;
    Rng rng { 0 };
    for (const auto& s : corpus.sentences) {
        Tape<Real> tape { Tape<Real>::Mode::inference };
        total += static_cast<double>(model.sentence_loss(tape, s, false, rng).item());
        tokens += s.size();
    }
    return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

template <typename Real>
auto tag_conll_text(const NerModel<Real>& model, std::string_view text)
  -> std::string
{
    const auto corpus = parse_conll(text, ParseOptions { .ner_optional = true });
    const auto predictions = predict_corpus(model, corpus);

    std::string out;
    std::size_t sentence = 0;
    std::size_t token = 0;
    std::size_t pos = 0;
    bool in_sentence = false;
    while (pos <= text.size()) {
        const auto nl = std::min(text.find('\n', pos), text.size());
        auto line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        const bool blank = line.find_first_not_of(" \t") == std::string_view::npos;
        if (blank) {
            if (in_sentence) {
                ++sentence;
                token = 0;
                in_sentence = false;
            }
        } else {
            in_sentence = true;
            const auto& t = corpus.sentences.at(sentence).tokens.at(token);
            out += t.surface + '\t' + t.pos + '\t' + t.chunk + '\t'
                   + predictions[sentence][token];
            ++token;
        }
        if (nl == text.size()) {
            break;
        }
        out += '\n';
        pos = nl + 1;
    }
    return out;
}

#define NER_INSTANTIATE_MODEL(Real)                                            \
    template class NerModel<Real>;                                             \
    template void check_label_inventory(const NerModel<Real>&, const Corpus&); \
    template auto predict_corpus(const NerModel<Real>&, const Corpus&)         \
      -> TagSequences;                                                         \
    template auto evaluate(const NerModel<Real>&, const Corpus&)               \
      -> MetricsReport;                                                        \
    template auto mean_token_loss(const NerModel<Real>&, const Corpus&)        \
      -> double;                                                               \
    template auto tag_conll_text(const NerModel<Real>&, std::string_view)      \
      -> std::string;

NER_INSTANTIATE_MODEL(float)
NER_INSTANTIATE_MODEL(double)

#undef NER_INSTANTIATE_MODEL

} // namespace ner

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

#include "ner/features.hpp"

#include "ner/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ner {

template <typename Real>
auto unk_vector(std::size_t dim, Rng& rng) -> std::vector<Real>
{
    if (dim == 0) {
        throw ParameterError("embedding dimension must be at least 1");
    }
    const double bound = std::sqrt(3.0 / static_cast<double>(dim));
    std::vector<Real> out(dim);
    for (auto& v : out) {
        Real x = static_cast<Real>(rng.uniform(-bound, bound));
        // Rounding to float can step just outside the bound.
        while (std::abs(static_cast<double>(x)) > bound) {
            x = std::nextafter(x, Real { 0 });
        }
        v = x;
    }
    return out;
}

template <typename Real>
EmbeddingTable<Real>::EmbeddingTable(Vocab vocab,
                                     std::size_t dim,
                                     bool trainable,
                                     Rng& rng)
  : vocab_ { std::move(vocab) }, dim_ { dim }
{
    if (dim == 0) {
        throw ParameterError("embedding dimension must be at least 1");
    }
    std::vector<Real> data;
    data.reserve(vocab_.size() * dim);
    for (std::size_t r = 0; r < vocab_.size(); ++r) {
        if (r == Vocab::pad) {
            data.insert(data.end(), dim, Real { 0 });
        } else {
            const auto v = unk_vector<Real>(dim, rng);
            data.insert(data.end(), v.begin(), v.end());
        }
    }
    rows_ = Tensor<Real>({ vocab_.size(), dim }, std::move(data), trainable);
}

template <typename Real>
EmbeddingTable<Real>::EmbeddingTable(Vocab vocab,
                                     Tensor<Real> rows,
                                     bool trainable)
  : vocab_ { std::move(vocab) }, rows_ { std::move(rows) }
{
    if (rows_.rank() != 2 || rows_.shape()[0] != vocab_.size()) {
        throw DimensionError("embedding rows " + shape_string(rows_.shape())
                             + " do not match a vocabulary of "
                             + std::to_string(vocab_.size()));
    }
    dim_ = rows_.shape()[1];
    rows_.set_requires_grad(trainable);
}

template <typename Real>
auto EmbeddingTable<Real>::lookup_index(std::string_view symbol) const
  -> std::size_t
{
    const auto exact = vocab_.index(symbol);
    if (exact != Vocab::unk) {
        return exact;
    }
    return vocab_.index(utf8::to_lower(symbol));
}

template <typename Real>
auto EmbeddingTable<Real>::row_values(std::size_t index) const
  -> std::vector<Real>
{
    const auto d = rows_.data();
    const auto begin = d.begin() + static_cast<std::ptrdiff_t>(index * dim_);
    return { begin, begin + static_cast<std::ptrdiff_t>(dim_) };
}

template <typename Real>
auto one_hot(std::string_view tag, const SymbolTable& inventory)
  -> std::vector<Real>
{
    std::vector<Real> out(inventory.size(), Real { 0 });
    if (const auto idx = inventory.find(tag)) {
        out[*idx] = Real { 1 };
    }
    return out;
}

auto skipgram_pairs(std::size_t sentence_length, std::size_t window)
  -> std::vector<std::pair<std::size_t, std::size_t>>
{
    if (window == 0) {
        throw ParameterError("skip-gram window must be at least 1");
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < sentence_length; ++i) {
        const std::size_t lo = i >= window ? i - window : 0;
        const std::size_t hi = std::min(sentence_length - 1, i + window);
        for (std::size_t j = lo; j <= hi; ++j) {
            if (j != i) {
                pairs.emplace_back(i, j);
            }
        }
    }
    return pairs;
}

namespace {

auto sigmoid_scalar(double x) -> double
{
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

template <typename Real>
auto train_skipgram(const std::vector<std::vector<std::string>>& corpus,
                    const SkipGramOptions& options) -> EmbeddingTable<Real>
{
    if (options.dim == 0) {
        throw ParameterError("embedding dimension must be at least 1");
    }
    std::unordered_map<std::string, std::size_t> counts;
    std::vector<std::string> first_seen;
    for (const auto& sentence : corpus) {
        for (const auto& w : sentence) {
            if (counts[w]++ == 0) {
                first_seen.push_back(w);
            }
        }
    }
    if (first_seen.empty()) {
        throw ValidationError("skip-gram corpus is empty");
    }
    std::stable_sort(first_seen.begin(),
                     first_seen.end(),
                     [&](const std::string& a, const std::string& b) {
                         return counts.at(a) > counts.at(b);
                     });
    Vocab vocab { first_seen };

    const std::size_t dim = options.dim;
    const std::size_t n_rows = vocab.size();
    Rng rng { options.seed };

    std::vector<Real> input(n_rows * dim, Real { 0 });
    {
        const auto unk = unk_vector<Real>(dim, rng);
        std::copy(unk.begin(), unk.end(), input.begin());
        const double half = 0.5 / static_cast<double>(dim);
        for (std::size_t r = 2; r < n_rows; ++r) {
            for (std::size_t k = 0; k < dim; ++k) {
                input[r * dim + k] = static_cast<Real>(rng.uniform(-half, half));
            }
        }
    }
    std::vector<Real> output(n_rows * dim, Real { 0 });

    // Cumulative unigram^0.75 distribution over regular rows.
    std::vector<double> noise_cdf;
    noise_cdf.reserve(n_rows - 2);
    double total = 0.0;
    for (std::size_t r = 2; r < n_rows; ++r) {
        total += std::pow(static_cast<double>(counts.at(vocab.symbol(r))), 0.75);
        noise_cdf.push_back(total);
    }
    const auto draw_noise = [&]() -> std::size_t {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), u);
        const auto k = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(it - noise_cdf.begin(),
                                   static_cast<std::ptrdiff_t>(noise_cdf.size()) - 1));
        return k + 2;
    };

    std::vector<std::vector<std::size_t>> ids;
    ids.reserve(corpus.size());
    std::size_t pairs_per_epoch = 0;
    for (const auto& sentence : corpus) {
        std::vector<std::size_t> s;
        s.reserve(sentence.size());
        for (const auto& w : sentence) {
            s.push_back(vocab.index(w));
        }
        pairs_per_epoch += skipgram_pairs(s.size(), options.window).size();
        ids.push_back(std::move(s));
    }
    const double total_pairs =
      std::max(1.0, static_cast<double>(pairs_per_epoch * options.epochs));

    std::vector<double> accum(dim);
    std::size_t processed = 0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        for (const auto& s : ids) {
            for (const auto& [i, j] : skipgram_pairs(s.size(), options.window)) {
                const double lr =
                  options.learning_rate
                  * std::max(1e-4, 1.0 - static_cast<double>(processed) / total_pairs);
                ++processed;
                const std::size_t target = s[i];
                const std::size_t context = s[j];
                Real* in = &input[target * dim];
                std::fill(accum.begin(), accum.end(), 0.0);
                for (std::size_t d = 0; d <= options.negatives; ++d) {
                    std::size_t sample = context;
                    double label = 1.0;
                    if (d > 0) {
                        sample = draw_noise();
                        if (sample == context) {
                            continue;
                        }
                        label = 0.0;
                    }
                    Real* out = &output[sample * dim];
                    double dot = 0.0;
                    for (std::size_t k = 0; k < dim; ++k) {
                        dot += static_cast<double>(in[k]) * static_cast<double>(out[k]);
                    }
                    const double g = (label - sigmoid_scalar(dot)) * lr;
                    for (std::size_t k = 0; k < dim; ++k) {
                        accum[k] += g * static_cast<double>(out[k]);
                        out[k] += static_cast<Real>(g * static_cast<double>(in[k]));
                    }
                }
                for (std::size_t k = 0; k < dim; ++k) {
                    in[k] += static_cast<Real>(accum[k]);
                }
            }
        }
    }
    Tensor<Real> rows { { n_rows, dim }, std::move(input) };
    return EmbeddingTable<Real>(std::move(vocab), std::move(rows), false);
}

auto read_plain_corpus(const std::string& path)
  -> std::vector<std::vector<std::string>>
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::vector<std::vector<std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream words(line);
        std::vector<std::string> sentence;
        std::string w;
        while (words >> w) {
            sentence.push_back(w);
        }
        if (!sentence.empty()) {
            out.push_back(std::move(sentence));
        }
    }
    return out;
}

namespace {

template <typename Real>
void append_number(std::string& out, Real value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, res.ptr);
}

} // namespace

template <typename Real>
auto format_embeddings(const EmbeddingTable<Real>& table) -> std::string
{
    const auto& vocab = table.vocab();
    std::string out = std::to_string(vocab.size() - 2) + " "
                      + std::to_string(table.dim()) + "\n";
    for (std::size_t r = 2; r < vocab.size(); ++r) {
        out += vocab.symbol(r);
        for (const Real v : table.row_values(r)) {
            out += ' ';
            append_number(out, v);
        }
        out += '\n';
    }
    return out;
}

template <typename Real>
void write_embeddings(const EmbeddingTable<Real>& table, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << format_embeddings(table);
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

template <typename Real>
auto parse_embeddings(std::string_view text, Rng& rng) -> EmbeddingTable<Real>
{
    std::istringstream in { std::string(text) };
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(1, "missing embedding header");
    }
    std::istringstream header(line);
    std::size_t count = 0;
    std::size_t dim = 0;
    if (!(header >> count >> dim) || dim == 0) {
        throw ParseError(1, "embedding header must be '<count> <dim>'");
    }

    Vocab vocab;
    std::vector<Real> data;
    data.reserve((count + 2) * dim);
    const auto unk = unk_vector<Real>(dim, rng);
    data.insert(data.end(), unk.begin(), unk.end());
    data.insert(data.end(), dim, Real { 0 });

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string word;
        fields >> word;
        if (vocab.contains(word)) {
            throw ParseError(line_no, "duplicate word '" + word + "'");
        }
        vocab.add(word);
        std::string tok;
        std::size_t k = 0;
        while (fields >> tok) {
            Real v {};
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc {} || res.ptr != tok.data() + tok.size()) {
                throw ParseError(line_no, "bad number '" + tok + "'");
            }
            data.push_back(v);
            ++k;
        }
        if (k != dim) {
            throw ParseError(line_no,
                             "expected " + std::to_string(dim) + " values, found "
                               + std::to_string(k));
        }
    }
    if (vocab.size() - 2 != count) {
        throw ParseError(line_no,
                         "header announces " + std::to_string(count)
                           + " words, file has "
                           + std::to_string(vocab.size() - 2));
    }
    Tensor<Real> rows { { vocab.size(), dim }, std::move(data) };
    return EmbeddingTable<Real>(std::move(vocab), std::move(rows), false);
}

template <typename Real>
auto read_embeddings(const std::string& path, Rng& rng) -> EmbeddingTable<Real>
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_embeddings<Real>(buf.str(), rng);
}

template <typename Real>
auto build_word_representation(Tape<Real>& tape,
                               const Token& token,
                               const EmbeddingTable<Real>& words,
                               const TagInventory& tags,
                               const Tensor<Real>& char_vector,
                               std::size_t char_dim) -> Tensor<Real>
{
    if (!char_vector.defined() || char_vector.rank() != 1
        || char_vector.size() != char_dim) {
        throw DimensionError(
          "character feature has shape "
          + (char_vector.defined() ? shape_string(char_vector.shape())
                                   : std::string("[]"))
          + ", expected [" + std::to_string(char_dim) + "]");
    }
    const auto word = words.embed(tape, words.lookup_index(token.surface));
    const auto pos = Tensor<Real>::vector(one_hot<Real>(token.pos, tags.pos));
    const auto chunk =
      Tensor<Real>::vector(one_hot<Real>(token.chunk, tags.chunk));
    return concat<Real>(tape, { word, pos, chunk, char_vector });
}

#define NER_INSTANTIATE_FEATURES(Real)                                         \
    template auto unk_vector<Real>(std::size_t, Rng&) -> std::vector<Real>;    \
    template class EmbeddingTable<Real>;                                       \
    template auto one_hot<Real>(std::string_view, const SymbolTable&)          \
      -> std::vector<Real>;                                                    \
    template auto train_skipgram<Real>(                                        \
      const std::vector<std::vector<std::string>>&, const SkipGramOptions&)    \
      -> EmbeddingTable<Real>;                                                 \
    template auto format_embeddings<Real>(const EmbeddingTable<Real>&)         \
      -> std::string;                                                          \
    template void write_embeddings<Real>(const EmbeddingTable<Real>&,          \
                                         const std::string&);                  \
    template auto read_embeddings<Real>(const std::string&, Rng&)              \
      -> EmbeddingTable<Real>;                                                 \
    template auto parse_embeddings<Real>(std::string_view, Rng&)               \
      -> EmbeddingTable<Real>;                                                 \
    template auto build_word_representation<Real>(Tape<Real>&,                 \
                                                  const Token&,                \
                                                  const EmbeddingTable<Real>&, \
                                                  const TagInventory&,         \
                                                  const Tensor<Real>&,         \
                                                  std::size_t) -> Tensor<Real>;

NER_INSTANTIATE_FEATURES(float)
NER_INSTANTIATE_FEATURES(double)

#undef NER_INSTANTIATE_FEATURES

} // namespace ner

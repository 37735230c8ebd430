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

#include "ner/errors.hpp"
#include "ner/features.hpp"
#include "ner/vocab.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace ner;

namespace {

auto inventory(std::initializer_list<const char*> symbols) -> SymbolTable
{
    SymbolTable t;
    for (const auto* s : symbols) {
        t.add(s);
    }
    return t;
}

} // namespace

TEST_SUITE("features")
{
    TEST_CASE("vocab reserves UNK and PAD")
    {
        Vocab v;
        CHECK(v.size() == 2);
        CHECK(v.symbol(Vocab::unk) == "<unk>");
        CHECK(v.symbol(Vocab::pad) == "<pad>");
        CHECK(v.add("Hà_Nội") == 2);
        CHECK(v.add("đẹp") == 3);
        CHECK(v.add("Hà_Nội") == 2);
        CHECK(v.index("đẹp") == 3);
        CHECK(v.index("never-seen") == Vocab::unk);
        CHECK(v.contains("Hà_Nội"));
        CHECK_FALSE(v.contains("<unk>"));
        CHECK(v.regular_symbols() == std::vector<std::string> { "Hà_Nội", "đẹp" });
        CHECK(Vocab(v.regular_symbols()) == v);
    }

    TEST_CASE("utf8 lowercasing covers Vietnamese letters")
    {
        CHECK(utf8::to_lower("HÀ_NỘI") == "hà_nội");
        CHECK(utf8::to_lower("ĐẸP") == "đẹp");
        CHECK(utf8::to_lower("ƯỚC Ơ") == "ước ơ");
        CHECK(utf8::to_lower("abc") == "abc");
        CHECK(utf8::characters("Hà") == std::vector<std::string> { "H", "à" });
        CHECK_FALSE(utf8::first_invalid("Hà_Nội").has_value());
        CHECK(utf8::first_invalid("a\xff") == 1U);
    }

    TEST_CASE("unk_vector bound")
    {
        Rng rng { 1 };
        for (int rep = 0; rep < 100; ++rep) {
            for (const double v : unk_vector<double>(300, rng)) {
                CHECK(std::abs(v) <= 0.1);
            }
        }
        // dim 3: bound exactly 1
        double largest = 0.0;
        for (int rep = 0; rep < 2000; ++rep) {
            for (const float v : unk_vector<float>(3, rng)) {
                CHECK(std::abs(v) <= 1.0F);
                largest = std::max(largest, std::abs(static_cast<double>(v)));
            }
        }
        CHECK(largest > 0.99);
        CHECK_THROWS_AS(unk_vector<double>(0, rng), ParameterError);
    }

    TEST_CASE("unk_vector variance is b^2/3")
    {
        Rng rng { 2 };
        double sum = 0.0;
        double sq = 0.0;
        std::size_t n = 0;
        for (int rep = 0; rep < 10000; ++rep) {
            for (const double v : unk_vector<double>(300, rng)) {
                sum += v;
                sq += v * v;
                ++n;
            }
        }
        const double mean = sum / static_cast<double>(n);
        const double var = sq / static_cast<double>(n) - mean * mean;
        CHECK(std::abs(var - 0.01 / 3.0) <= 0.1 * 0.01 / 3.0);
    }

    TEST_CASE("one_hot")
    {
        const auto inv = inventory({ "N", "V", "A", "E" });
        CHECK(one_hot<double>("N", inv) == std::vector<double> { 1, 0, 0, 0 });
        CHECK(one_hot<double>("E", inv) == std::vector<double> { 0, 0, 0, 1 });
        CHECK(one_hot<double>("Np", inv) == std::vector<double> { 0, 0, 0, 0 });
        for (const char* tag : { "N", "V", "A", "E", "X", "" }) {
            const auto v = one_hot<double>(tag, inv);
            const double s = std::accumulate(v.begin(), v.end(), 0.0);
            CHECK((s == 0.0 || s == 1.0));
        }
    }

    TEST_CASE("skipgram_pairs")
    {
        const auto pairs = skipgram_pairs(5, 2);
        std::set<std::size_t> ctx2;
        std::set<std::size_t> ctx0;
        for (const auto& [i, j] : pairs) {
            if (i == 2) {
                ctx2.insert(j);
            }
            if (i == 0) {
                ctx0.insert(j);
            }
        }
        CHECK(ctx2 == std::set<std::size_t> { 0, 1, 3, 4 });
        CHECK(ctx0 == std::set<std::size_t> { 1, 2 });
        CHECK(skipgram_pairs(1, 2).empty());
        CHECK(std::is_sorted(pairs.begin(), pairs.end()));

        // symmetric and exactly the pairs with 1 <= |i-j| <= window
        for (std::size_t len = 1; len < 9; ++len) {
            for (std::size_t w = 1; w < 4; ++w) {
                const auto ps = skipgram_pairs(len, w);
                const std::set<std::pair<std::size_t, std::size_t>> s(ps.begin(), ps.end());
                std::size_t expected = 0;
                for (std::size_t i = 0; i < len; ++i) {
                    for (std::size_t j = 0; j < len; ++j) {
                        const auto d = i > j ? i - j : j - i;
                        const bool want = d >= 1 && d <= w;
                        expected += want ? 1 : 0;
                        CHECK(s.contains({ i, j }) == want);
                    }
                }
                CHECK(ps.size() == expected);
            }
        }
        CHECK_THROWS_AS(skipgram_pairs(3, 0), ParameterError);
    }

    TEST_CASE("skip-gram is deterministic and lr 0 leaves the initialization")
    {
        const std::vector<std::vector<std::string>> corpus = {
            { "a", "b", "c", "a" }, { "b", "c", "d" }, { "a", "d" }
        };
        SkipGramOptions opt;
        opt.dim = 8;
        opt.epochs = 3;
        opt.seed = 4;
        const auto t1 = train_skipgram<float>(corpus, opt);
        const auto t2 = train_skipgram<float>(corpus, opt);
        CHECK(t1.rows().values() == t2.rows().values());
        CHECK(t1.vocab().regular_symbols()
              == std::vector<std::string> { "a", "b", "c", "d" });

        auto frozen = opt;
        frozen.epochs = 1;
        frozen.learning_rate = 0.0;
        auto untouched = opt;
        untouched.epochs = 0;
        const auto a = train_skipgram<float>(corpus, frozen);
        const auto b = train_skipgram<float>(corpus, untouched);
        CHECK(a.rows().values() == b.rows().values());
        CHECK(a.rows().values() != t1.rows().values());
        for (std::size_t r = 2; r < a.vocab().size(); ++r) {
            for (const float v : a.row_values(r)) {
                CHECK(std::abs(v) <= 0.5F / 8.0F);
            }
        }
        CHECK(a.row_values(Vocab::pad) == std::vector<float>(8, 0.0F));

        CHECK_THROWS_AS(train_skipgram<float>({}, opt), ValidationError);
        CHECK_THROWS_AS(train_skipgram<float>({ {} }, opt), ValidationError);
    }

    TEST_CASE("skip-gram separates two co-occurrence clusters")
    {
        std::vector<std::vector<std::string>> corpus;
        Rng rng { 9 };
        for (int s = 0; s < 2000; ++s) {
            const char prefix = (s % 2 == 0) ? 'x' : 'y';
            std::vector<std::string> sentence;
            for (int t = 0; t < 8; ++t) {
                sentence.push_back(prefix + std::to_string(rng.below(10)));
            }
            corpus.push_back(sentence);
        }
        SkipGramOptions opt;
        opt.dim = 16;
        opt.epochs = 2;
        const auto table = train_skipgram<double>(corpus, opt);
        const auto cosine = [&](const std::string& a, const std::string& b) {
            const auto u = table.row_values(table.lookup_index(a));
            const auto v = table.row_values(table.lookup_index(b));
            double uv = 0;
            double uu = 0;
            double vv = 0;
            for (std::size_t k = 0; k < u.size(); ++k) {
                uv += u[k] * v[k];
                uu += u[k] * u[k];
                vv += v[k] * v[k];
            }
            return uv / std::sqrt(uu * vv);
        };
        double intra = 0;
        double inter = 0;
        int n_intra = 0;
        int n_inter = 0;
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < 10; ++j) {
                if (i != j) {
                    intra += cosine("x" + std::to_string(i), "x" + std::to_string(j));
                    intra += cosine("y" + std::to_string(i), "y" + std::to_string(j));
                    n_intra += 2;
                }
                inter += cosine("x" + std::to_string(i), "y" + std::to_string(j));
                ++n_inter;
            }
        }
        CHECK(intra / n_intra > inter / n_inter);
    }

    TEST_CASE("embedding table lookup: exact, lowercase, UNK")
    {
        Vocab v;
        v.add("hà_nội");
        v.add("Đà_Nẵng");
        Rng rng { 3 };
        const EmbeddingTable<double> table { v, 4, false, rng };
        CHECK(table.lookup_index("hà_nội") == 2);
        CHECK(table.lookup_index("HÀ_NỘI") == 2);
        CHECK(table.lookup_index("Đà_Nẵng") == 3);
        CHECK(table.lookup_index("đà_nẵng") == Vocab::unk);
        CHECK(table.row_values(Vocab::pad) == std::vector<double>(4, 0.0));
        for (const double x : table.row_values(Vocab::unk)) {
            CHECK(std::abs(x) <= 1.0); // sqrt(3/4) < 1
        }
        CHECK_FALSE(table.trainable());
        CHECK_THROWS_AS(
          EmbeddingTable<double>(v, Tensor<double>::zeros({ 3, 4 }), true),
          DimensionError);
    }

    TEST_CASE("embedding file round trip")
    {
        Vocab v;
        v.add("một");
        v.add("hai");
        Rng rng { 5 };
        const EmbeddingTable<float> table { v, 3, true, rng };
        const auto text = format_embeddings(table);
        CHECK(text.rfind("2 3\n", 0) == 0);
        Rng rng2 { 6 };
        const auto back = parse_embeddings<float>(text, rng2);
        CHECK(back.vocab() == table.vocab());
        CHECK(back.dim() == 3);
        for (std::size_t r = 2; r < 4; ++r) {
            CHECK(back.row_values(r) == table.row_values(r));
        }
        CHECK(back.row_values(Vocab::pad) == std::vector<float>(3, 0.0F));

        Rng rng3 { 6 };
        CHECK_THROWS_AS(parse_embeddings<float>("2 3\nmột 1 2\n", rng3), ParseError);
        CHECK_THROWS_AS(parse_embeddings<float>("", rng3), ParseError);
        CHECK_THROWS_AS(parse_embeddings<float>("1 2\na 1 x\n", rng3), ParseError);
        CHECK_THROWS_AS(parse_embeddings<float>("2 1\na 1\na 2\n", rng3), ParseError);
    }

    TEST_CASE("word representation layout")
    {
        Vocab v;
        v.add("Hà_Nội");
        Rng rng { 8 };
        const EmbeddingTable<double> words { v, 300, false, rng };
        TagInventory tags;
        for (int i = 0; i < 20; ++i) {
            tags.pos.add("P" + std::to_string(i));
        }
        for (int i = 0; i < 10; ++i) {
            tags.chunk.add("C" + std::to_string(i));
        }
        const auto cv = Tensor<double>::zeros({ 60 });
        Tape<double> tape;
        const Token tok { "Hà_Nội", "P3", "C7", "B-LOC" };
        const auto rep = build_word_representation(tape, tok, words, tags, cv, 60);
        CHECK(rep.size() == 390);
        const auto d = rep.values();
        CHECK(std::vector<double>(d.begin(), d.begin() + 300) == words.row_values(2));
        CHECK(std::accumulate(d.begin() + 300, d.begin() + 320, 0.0) == 1.0);
        CHECK(d[303] == 1.0);
        CHECK(d[327] == 1.0);

        const Token unk { "không_có", "P99", "C0", "O" };
        const auto rep2 = build_word_representation(tape, unk, words, tags, cv, 60);
        const auto d2 = rep2.values();
        CHECK(std::vector<double>(d2.begin(), d2.begin() + 300)
              == words.row_values(Vocab::unk));
        CHECK(std::accumulate(d2.begin() + 300, d2.begin() + 320, 0.0) == 0.0);

        CHECK_THROWS_AS(build_word_representation(
                          tape, tok, words, tags, Tensor<double>::zeros({ 59 }), 60),
                        DimensionError);
    }

    TEST_CASE("word representation golden order")
    {
        // [word | pos | chunk | char], each slice identifiable by value.
        Vocab v;
        v.add("w");
        const EmbeddingTable<double> words { v,
                                             Tensor<double>({ 3, 2 },
                                                            { 0, 0, 0, 0, 7, 8 }),
                                             false };
        TagInventory tags;
        tags.pos = inventory({ "A", "B" });
        tags.chunk = inventory({ "X", "Y", "Z" });
        Tape<double> tape;
        const auto rep = build_word_representation(
          tape, Token { "w", "B", "X", "O" }, words, tags,
          Tensor<double>::vector({ 5, 6 }), 2);
        CHECK(rep.values() == std::vector<double> { 7, 8, 0, 1, 1, 0, 0, 5, 6 });
    }
}

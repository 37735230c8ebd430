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

#include "fixtures.hpp"

#include "ner/checkpoint.hpp"
#include "ner/config.hpp"
#include "ner/errors.hpp"
#include "ner/trainer.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

using namespace ner;

namespace {

auto line_count(const std::string& text) -> std::size_t
{
    if (text.empty()) {
        return 0;
    }
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'))
           + (text.back() == '\n' ? 0 : 1);
}

template <typename Real>
auto trained_model(std::size_t epochs) -> TrainResult<Real>
{
    auto config = fixture::small_config(epochs);
    config.precision = sizeof(Real) == 8 ? 64 : 32;
    return train_model<Real>(config, fixture::train_corpus(40), fixture::validation_corpus(10), nullptr);
}

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("config defaults are the published hyperparameters")
    {
        const Config c;
        CHECK(c.char_dim == 60);
        CHECK(c.word_dim == 300);
        CHECK(c.hidden_char == 30);
        CHECK(c.hidden_word == 64);
        CHECK(c.dropout_char == 0.3);
        CHECK(c.dropout_bilstm == 0.5);
        CHECK(c.batch_size == 64);
        CHECK(c.epochs == 40);
        CHECK(c.lr_phase1 == 0.004);
        CHECK(c.lr_phase2 == 0.0004);
        CHECK(c.phase1_epochs == 20);
        CHECK_NOTHROW(c.validate());
    }

    TEST_CASE("config text round trip")
    {
        Config c;
        c.hidden_word = 17;
        c.dropout_char = 0.25;
        c.lr_phase2 = 1.5e-5;
        c.freeze_embeddings = false;
        c.precision = 64;
        c.train = "data/train.txt";
        c.seed = 12345678901ULL;
        CHECK(parse_config(format_config(c)) == c);
        for (const auto& key : Config::keys()) {
            CHECK(format_config(c).find(key) != std::string::npos);
        }
    }

    TEST_CASE("config parse errors")
    {
        const auto parsed = parse_config("# comment\n\nepochs = 3\n  seed=9  \n");
        CHECK(parsed.epochs == 3);
        CHECK(parsed.seed == 9);
        try {
            (void)parse_config("epochs = 3\nnonsense\n");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
        try {
            (void)parse_config("epochs = 3\n\nbogus_key = 1\n");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
        CHECK_THROWS_AS((void)parse_config("epochs = many\n"), ParseError);
        CHECK_THROWS_AS((void)parse_config("freeze_embeddings = maybe\n"), ParseError);
        CHECK_THROWS_AS((void)read_config("/nonexistent/ner.conf"), IoError);

        Config c;
        c.dropout_bilstm = 1.0;
        CHECK_THROWS_AS(c.validate(), ParameterError);
        c = {};
        c.precision = 16;
        CHECK_THROWS_AS(c.validate(), ParameterError);
        c = {};
        c.hidden_word = 0;
        CHECK_THROWS_AS(c.validate(), ParameterError);
        c = {};
        c.lr_phase1 = -1.0;
        CHECK_THROWS_AS(c.validate(), ParameterError);
    }

    TEST_CASE("checkpoint round trip is bitwise and predictive, float and double")
    {
        const auto f = trained_model<float>(2);
        const auto d = trained_model<double>(2);
        const auto held_out = synth_corpus(303, 20);

        const auto ckf = decode_checkpoint<float>(f.best_checkpoint);
        CHECK(encode_checkpoint(ckf.model, ckf.optimizer ? &*ckf.optimizer : nullptr, ckf.best)
              == f.best_checkpoint);
        CHECK(ckf.best == f.best);
        const auto ckd = decode_checkpoint<double>(d.best_checkpoint);
        CHECK(encode_checkpoint(ckd.model, ckd.optimizer ? &*ckd.optimizer : nullptr, ckd.best)
              == d.best_checkpoint);
        CHECK(peek_checkpoint_config(d.best_checkpoint).precision == 64);

        // the stored tensors are 8 bytes wide in 64-bit mode
        CHECK(d.best_checkpoint.size() > f.best_checkpoint.size());

        // through the filesystem
        const auto path = (std::filesystem::temp_directory_path() / "ner_cli_test.ckpt").string();
        save_checkpoint<float>(path, ckf.model, nullptr, ckf.best);
        const auto again = load_checkpoint<float>(path);
        std::remove(path.c_str());
        CHECK(predict_corpus(again.model, held_out) == predict_corpus(ckf.model, held_out));
        CHECK(!again.optimizer);
    }

    TEST_CASE("damaged checkpoints are refused")
    {
        const auto r = trained_model<float>(1);
        auto bytes = r.final_checkpoint;
        CHECK_NOTHROW((void)decode_checkpoint<float>(bytes));

        SUBCASE("truncated")
        {
            for (const std::size_t keep : { std::size_t { 0 }, std::size_t { 7 }, std::size_t { 15 },
                                            bytes.size() / 2, bytes.size() - 1 }) {
                CAPTURE(keep);
                const std::vector<std::uint8_t> cut(bytes.begin(),
                                                    bytes.begin() + static_cast<std::ptrdiff_t>(keep));
                CHECK_THROWS_AS((void)decode_checkpoint<float>(cut), IntegrityError);
            }
        }
        SUBCASE("payload bit flip fails the checksum")
        {
            bytes[bytes.size() / 2] ^= 0x10;
            CHECK_THROWS_AS((void)decode_checkpoint<float>(bytes), IntegrityError);
        }
        SUBCASE("bad magic")
        {
            bytes[0] = 'X';
            CHECK_THROWS_AS((void)decode_checkpoint<float>(bytes), IntegrityError);
        }
        SUBCASE("trailing bytes")
        {
            bytes.push_back(0);
            CHECK_THROWS_AS((void)decode_checkpoint<float>(bytes), IntegrityError);
        }
        SUBCASE("future version names both versions")
        {
            bytes[8] = 2;
            try {
                (void)decode_checkpoint<float>(bytes);
                FAIL("expected an integrity error");
            } catch (const IntegrityError& e) {
                const std::string what = e.what();
                CHECK(what.find('2') != std::string::npos);
                CHECK(what.find('1') != std::string::npos);
            }
        }
        CHECK_THROWS_AS((void)load_checkpoint<float>("/nonexistent/model.ckpt"), IoError);
    }

    TEST_CASE("training is reproducible and the log echoes the configuration")
    {
        auto config = fixture::small_config(3);
        const auto train = fixture::train_corpus(30);
        const auto validation = fixture::validation_corpus(10);
        std::vector<std::string> streamed;
        const auto a = train_model<float>(config, train, validation, nullptr,
                                          [&](const std::string& line) { streamed.push_back(line); });
        const auto b = train_model<float>(config, train, validation, nullptr);
        CHECK(a.log == b.log);
        CHECK(a.epochs == b.epochs);
        CHECK(a.best_checkpoint == b.best_checkpoint);
        CHECK(a.final_checkpoint == b.final_checkpoint);

        std::string joined;
        for (const auto& line : streamed) {
            joined += line + '\n';
        }
        CHECK(joined == a.log);

        // every config key is echoed, and matches the checkpoint's copy
        const auto stored = peek_checkpoint_config(a.best_checkpoint);
        CHECK(stored == config);
        for (const auto& key : Config::keys()) {
            CHECK(a.log.find("# " + key + " = " + config.get(key) + "\n") != std::string::npos);
        }
        CHECK(a.log.find("epoch\ttrain_loss\tvalidation_loss\tlr\n") != std::string::npos);

        REQUIRE(a.epochs.size() == 3);
        for (std::size_t i = 0; i < a.epochs.size(); ++i) {
            CHECK(a.epochs[i].epoch == i + 1);
            CHECK(a.log.find(format_epoch_line(a.epochs[i])) != std::string::npos);
        }
        // best is the lowest validation loss
        for (const auto& e : a.epochs) {
            CHECK(a.best.validation_loss <= e.validation_loss);
        }
        const auto best_it = std::min_element(
          a.epochs.begin(), a.epochs.end(),
          [](const auto& x, const auto& y) { return x.validation_loss < y.validation_loss; });
        CHECK(a.best.epoch == static_cast<std::int64_t>(best_it->epoch));

        config.seed = 8;
        const auto c = train_model<float>(config, train, validation, nullptr);
        CHECK(c.log != a.log);
    }

    TEST_CASE("zero learning rate leaves validation loss constant")
    {
        auto config = fixture::small_config(3);
        config.lr_phase1 = 0.0;
        config.lr_phase2 = 0.0;
        const auto r = train_model<double>(config, fixture::train_corpus(20),
                                           fixture::validation_corpus(5), nullptr);
        REQUIRE(r.epochs.size() == 3);
        CHECK(r.epochs[1].validation_loss == r.epochs[0].validation_loss);
        CHECK(r.epochs[2].validation_loss == r.epochs[0].validation_loss);
        CHECK(r.best.epoch == 1);
    }

    TEST_CASE("training refuses unusable data")
    {
        const auto config = fixture::small_config(1);
        CHECK_THROWS_AS((void)train_model<float>(config, Corpus {}, fixture::validation_corpus(5), nullptr),
                        ValidationError);

        // a validation label the model cannot represent
        auto validation = fixture::validation_corpus(5);
        validation.sentences[0].tokens[0].ner = "B-DATE";
        validation = Corpus::from_sentences(validation.sentences);
        CHECK_THROWS_AS((void)train_model<float>(config, fixture::train_corpus(20), validation, nullptr),
                        ValidationError);
    }

    TEST_CASE("tagging keeps one output line per input line")
    {
        const auto r = trained_model<float>(1);
        const auto ck = decode_checkpoint<float>(r.best_checkpoint);
        CHECK(tag_conll_text(ck.model, "").empty());

        const std::string three_col = "Anh\tN\tB-NP\nHung\tNp\tI-NP\n\nHa_Noi\tNp\tB-NP\n";
        const auto tagged = tag_conll_text(ck.model, three_col);
        CHECK(line_count(tagged) == line_count(three_col));
        std::size_t tokens = 0;
        std::size_t from = 0;
        while (from < tagged.size()) {
            const auto nl = std::min(tagged.find('\n', from), tagged.size());
            const auto line = tagged.substr(from, nl - from);
            if (!line.empty()) {
                ++tokens;
                CHECK(std::count(line.begin(), line.end(), '\t') == 3);
                const auto tag = line.substr(line.rfind('\t') + 1);
                CHECK(is_iob2_tag(tag));
            }
            from = nl + 1;
        }
        CHECK(tokens == 3);

        // gold labels in the input are replaced, not echoed
        const auto held_out = synth_corpus(404, 5);
        const auto text = serialize_conll(held_out.sentences);
        CHECK(line_count(tag_conll_text(ck.model, text)) == line_count(text));
    }
}

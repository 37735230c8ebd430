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

// Command-line front end: embed-train, train, eval, tag, synth.

#include "ner/checkpoint.hpp"
#include "ner/data.hpp"
#include "ner/errors.hpp"
#include "ner/features.hpp"
#include "ner/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

auto slurp(const std::string& path) -> std::string
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ner::IoError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) {
        throw ner::IoError("cannot write '" + path + "'");
    }
}

auto load_corpus(const std::string& path, ner::ParseOptions options = {})
  -> ner::Corpus
{
    if (path.empty()) {
        throw ner::ValidationError("no corpus path given");
    }
    try {
        auto corpus = ner::read_conll(path, options);
        for (const auto& note : corpus.repairs) {
            std::cerr << path << ": repaired: " << note << '\n';
        }
        return corpus;
    } catch (const ner::ParseError& e) {
        throw ner::ParseError(e.line(), path + ": " + e.what());
    }
}

template <typename Real>
void run_train(const ner::Config& config, const std::string& log_path)
{
    const auto train = load_corpus(config.train);
    const auto validation = load_corpus(config.validation);
    std::optional<ner::EmbeddingTable<Real>> pretrained;
    if (!config.embeddings.empty()) {
        ner::Rng rng { config.seed };
        pretrained = ner::read_embeddings<Real>(config.embeddings, rng);
    }
    std::ofstream log_file;
    if (!log_path.empty()) {
        log_file.open(log_path, std::ios::trunc);
        if (!log_file) {
            throw ner::IoError("cannot write '" + log_path + "'");
        }
    }
    const auto result = ner::train_model<Real>(
      config, train, validation, pretrained ? &*pretrained : nullptr,
      [&](const std::string& line) {
          std::cout << line << '\n' << std::flush;
          if (log_file) {
              log_file << line << '\n' << std::flush;
          }
      });
    std::cerr << fmt::format("best epoch {} (validation loss {})\n",
                             result.best.epoch,
                             result.best.validation_loss);
}

template <typename Real>
auto run_eval(const std::vector<std::uint8_t>& bytes, const std::string& corpus_path)
  -> ner::MetricsReport
{
    const auto ck = ner::decode_checkpoint<Real>(bytes);
    const auto corpus = load_corpus(corpus_path);
    return ner::evaluate(ck.model, corpus);
}

template <typename Real>
auto run_tag(const std::vector<std::uint8_t>& bytes, const std::string& text)
  -> std::string
{
    const auto ck = ner::decode_checkpoint<Real>(bytes);
    return ner::tag_conll_text(ck.model, text);
}

auto precision_of(const std::vector<std::uint8_t>& bytes) -> int
{
    return ner::peek_checkpoint_config(bytes).precision;
}

} // namespace

auto main(int argc, char** argv) -> int
{
    CLI::App app { "Bi-LSTM-CRF named entity recognizer" };
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic 4-column corpus");
    std::uint64_t synth_seed = 1;
    std::size_t synth_sentences = 200;
    std::string synth_out;
    synth->add_option("--seed", synth_seed, "Random seed");
    synth->add_option("--sentences,-n", synth_sentences, "Number of sentences");
    synth->add_option("--output,-o", synth_out, "Output path (default stdout)");

    // embed-train
    auto* embed = app.add_subcommand("embed-train", "Train skip-gram word vectors");
    ner::SkipGramOptions sg;
    std::string embed_corpus;
    std::string embed_out;
    embed->add_option("--corpus", embed_corpus, "Whitespace-tokenized text")->required();
    embed->add_option("--output,-o", embed_out, "Embedding file")->required();
    embed->add_option("--dim", sg.dim, "Vector dimension");
    embed->add_option("--epochs", sg.epochs, "Passes over the corpus");
    embed->add_option("--window", sg.window, "Context window radius");
    embed->add_option("--negatives", sg.negatives, "Noise samples per pair");
    embed->add_option("--learning-rate", sg.learning_rate, "Initial learning rate");
    embed->add_option("--seed", sg.seed, "Random seed");

    // train
    auto* train = app.add_subcommand("train", "Train a tagger");
    std::string config_path;
    std::string log_path;
    std::map<std::string, std::string> overrides;
    train->add_option("--config", config_path, "key = value configuration file");
    train->add_option("--log", log_path, "Also write the epoch log here");
    for (const auto& key : ner::Config::keys()) {
        train->add_option_function<std::string>(
          "--" + key,
          [&overrides, key](const std::string& v) { overrides[key] = v; },
          "Override config key " + key);
    }

    // eval
    auto* eval = app.add_subcommand("eval", "Score a checkpoint on a corpus");
    std::string eval_ckpt;
    std::string eval_corpus;
    std::string eval_json;
    eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    eval->add_option("--corpus", eval_corpus, "4-column corpus")->required();
    eval->add_option("--json", eval_json, "Also write raw counts as JSON here ('-' for stdout)");

    // tag
    auto* tag = app.add_subcommand("tag", "Predict NER tags for a 3/4-column file");
    std::string tag_ckpt;
    std::string tag_in;
    std::string tag_out;
    tag->add_option("--checkpoint", tag_ckpt, "Checkpoint file")->required();
    tag->add_option("--input,-i", tag_in, "Input file")->required();
    tag->add_option("--output,-o", tag_out, "Output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*synth) {
            const auto corpus = ner::synth_corpus(synth_seed, synth_sentences);
            spill(synth_out, ner::serialize_conll(corpus.sentences));
        } else if (*embed) {
            const auto text = ner::read_plain_corpus(embed_corpus);
            const auto table = ner::train_skipgram<float>(text, sg);
            ner::write_embeddings(table, embed_out);
        } else if (*train) {
            ner::Config config;
            if (!config_path.empty()) {
                config = ner::read_config(config_path);
            }
            for (const auto& [key, value] : overrides) {
                config.set(key, value);
            }
            config.validate();
            if (config.precision == 64) {
                run_train<double>(config, log_path);
            } else {
                run_train<float>(config, log_path);
            }
        } else if (*eval) {
            const auto bytes = ner::read_file_bytes(eval_ckpt);
            const auto report = precision_of(bytes) == 64
                                  ? run_eval<double>(bytes, eval_corpus)
                                  : run_eval<float>(bytes, eval_corpus);
            std::cout << ner::format_report(report);
            if (!eval_json.empty()) {
                spill(eval_json, ner::report_json(report) + '\n');
            }
        } else if (*tag) {
            const auto bytes = ner::read_file_bytes(tag_ckpt);
            const auto text = slurp(tag_in);
            spill(tag_out,
                  precision_of(bytes) == 64 ? run_tag<double>(bytes, text)
                                            : run_tag<float>(bytes, text));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

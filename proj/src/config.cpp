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

#include "ner/config.hpp"

#include "ner/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ner {

namespace {

auto trim(std::string_view s) -> std::string_view
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
auto parse_number(std::string_view key, std::string_view text) -> T
{
    T value {};
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc {} || res.ptr != end) {
        throw ValidationError("config key '" + std::string(key)
                              + "': cannot parse '" + std::string(text) + "'");
    }
    return value;
}

auto parse_bool(std::string_view key, std::string_view text) -> bool
{
    if (text == "true" || text == "1") {
        return true;
    }
    if (text == "false" || text == "0") {
        return false;
    }
    throw ValidationError("config key '" + std::string(key)
                          + "': expected true or false, got '"
                          + std::string(text) + "'");
}

auto number_text(double v) -> std::string
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return { buf, res.ptr };
}

} // namespace

auto Config::keys() -> const std::vector<std::string>&
{
    static const std::vector<std::string> k = {
        "char_dim",   "word_dim",      "hidden_char",   "hidden_word",
        "dropout_char", "dropout_bilstm", "batch_size", "epochs",
        "lr_phase1",  "lr_phase2",     "phase1_epochs", "seed",
        "beta1",      "beta2",         "epsilon",       "clip_norm",
        "freeze_embeddings", "precision", "train",      "validation",
        "test",       "embeddings",    "checkpoint",
    };
    return k;
}

void Config::set(std::string_view key, std::string_view value)
{
    const auto v = trim(value);
    if (key == "char_dim") {
        char_dim = parse_number<std::size_t>(key, v);
    } else if (key == "word_dim") {
        word_dim = parse_number<std::size_t>(key, v);
    } else if (key == "hidden_char") {
        hidden_char = parse_number<std::size_t>(key, v);
    } else if (key == "hidden_word") {
        hidden_word = parse_number<std::size_t>(key, v);
    } else if (key == "dropout_char") {
        dropout_char = parse_number<double>(key, v);
    } else if (key == "dropout_bilstm") {
        dropout_bilstm = parse_number<double>(key, v);
    } else if (key == "batch_size") {
        batch_size = parse_number<std::size_t>(key, v);
    } else if (key == "epochs") {
        epochs = parse_number<std::size_t>(key, v);
    } else if (key == "lr_phase1") {
        lr_phase1 = parse_number<double>(key, v);
    } else if (key == "lr_phase2") {
        lr_phase2 = parse_number<double>(key, v);
    } else if (key == "phase1_epochs") {
        phase1_epochs = parse_number<std::size_t>(key, v);
    } else if (key == "seed") {
        seed = parse_number<std::uint64_t>(key, v);
    } else if (key == "beta1") {
        beta1 = parse_number<double>(key, v);
    } else if (key == "beta2") {
        beta2 = parse_number<double>(key, v);
    } else if (key == "epsilon") {
        epsilon = parse_number<double>(key, v);
    } else if (key == "clip_norm") {
        clip_norm = parse_number<double>(key, v);
    } else if (key == "freeze_embeddings") {
        freeze_embeddings = parse_bool(key, v);
    } else if (key == "precision") {
        precision = parse_number<int>(key, v);
    } else if (key == "train") {
        train = v;
    } else if (key == "validation") {
        validation = v;
    } else if (key == "test") {
        test = v;
    } else if (key == "embeddings") {
        embeddings = v;
    } else if (key == "checkpoint") {
        checkpoint = v;
    } else {
        throw ValidationError("unknown config key '" + std::string(key) + "'");
    }
}

auto Config::get(std::string_view key) const -> std::string
{
    if (key == "char_dim") {
        return std::to_string(char_dim);
    }
    if (key == "word_dim") {
        return std::to_string(word_dim);
    }
    if (key == "hidden_char") {
        return std::to_string(hidden_char);
    }
    if (key == "hidden_word") {
        return std::to_string(hidden_word);
    }
    if (key == "dropout_char") {
        return number_text(dropout_char);
    }
    if (key == "dropout_bilstm") {
        return number_text(dropout_bilstm);
    }
    if (key == "batch_size") {
        return std::to_string(batch_size);
    }
    if (key == "epochs") {
        return std::to_string(epochs);
    }
    if (key == "lr_phase1") {
        return number_text(lr_phase1);
    }
    if (key == "lr_phase2") {
        return number_text(lr_phase2);
    }
    if (key == "phase1_epochs") {
        return std::to_string(phase1_epochs);
    }
    if (key == "seed") {
        return std::to_string(seed);
    }
    if (key == "beta1") {
        return number_text(beta1);
    }
    if (key == "beta2") {
        return number_text(beta2);
    }
    if (key == "epsilon") {
        return number_text(epsilon);
    }
    if (key == "clip_norm") {
        return number_text(clip_norm);
    }
    if (key == "freeze_embeddings") {
        return freeze_embeddings ? "true" : "false";
    }
    if (key == "precision") {
        return std::to_string(precision);
    }
    if (key == "train") {
        return train;
    }
    if (key == "validation") {
        return validation;
    }
    if (key == "test") {
        return test;
    }
    if (key == "embeddings") {
        return embeddings;
    }
    if (key == "checkpoint") {
        return checkpoint;
    }
    throw ValidationError("unknown config key '" + std::string(key) + "'");
}

void Config::validate() const
{
    if (char_dim == 0 || word_dim == 0 || hidden_char == 0 || hidden_word == 0) {
        throw ParameterError("dimensions and hidden sizes must be positive");
    }
    for (const double rate : { dropout_char, dropout_bilstm }) {
        if (!(rate >= 0.0 && rate < 1.0)) {
            throw ParameterError("dropout rates must lie in [0, 1)");
        }
    }
    if (batch_size == 0) {
        throw ParameterError("batch_size must be at least 1");
    }
    if (lr_phase1 < 0.0 || lr_phase2 < 0.0) {
        throw ParameterError("learning rates must be non-negative");
    }
    if (precision != 32 && precision != 64) {
        throw ParameterError("precision must be 32 or 64");
    }
}

auto parse_config(std::string_view text, Config base) -> Config
{
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = std::min(text.find('\n', pos), text.size());
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (!line.empty()) {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError(line_no, "expected 'key = value'");
            }
            try {
                base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
            } catch (const ValidationError& e) {
                throw ParseError(line_no, e.what());
            }
        }
        if (nl == text.size()) {
            break;
        }
    }
    return base;
}

auto read_config(const std::string& path, Config base) -> Config
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

auto format_config(const Config& config) -> std::string
{
    std::string out;
    for (const auto& key : Config::keys()) {
        out += key;
        out += " = ";
        out += config.get(key);
        out += '\n';
    }
    return out;
}

} // namespace ner

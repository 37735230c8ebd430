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

#include "ner/optim.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ner {

/// Model and training settings. Defaults are the published
/// hyper-parameters of the Bi-LSTM-CRF tagger.
struct Config
{
    std::size_t char_dim = 60;
    std::size_t word_dim = 300;
    std::size_t hidden_char = 30;
    std::size_t hidden_word = 64;
    double dropout_char = 0.3;
    double dropout_bilstm = 0.5;
    std::size_t batch_size = 64;
    std::size_t epochs = 40;
    double lr_phase1 = 0.004;
    double lr_phase2 = 0.0004;
    std::size_t phase1_epochs = 20;
    std::uint64_t seed = 1;

    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Gradient-norm clipping threshold; 0 disables it.
    double clip_norm = 0.0;
    /// Keep pretrained word vectors fixed during training.
    bool freeze_embeddings = true;
    /// 32 or 64: real type used for training and checkpoint storage.
    int precision = 32;

    std::string train;
    std::string validation;
    std::string test;
    std::string embeddings;
    std::string checkpoint;

    /// All keys accepted by set() and the config file, in file order.
    static auto keys() -> const std::vector<std::string>&;

    /// Assigns one key from its text form; ValidationError on unknown
    /// keys or malformed values.
    void set(std::string_view key, std::string_view value);
    [[nodiscard]] auto get(std::string_view key) const -> std::string;

    [[nodiscard]] auto schedule() const -> LrSchedule
    {
        return { lr_phase1, lr_phase2, phase1_epochs };
    }
    [[nodiscard]] auto nadam() const -> NadamConfig
    {
        return { beta1, beta2, epsilon };
    }

    /// Checks ranges (positive sizes, dropout in [0,1), precision).
    void validate() const;

    friend auto operator==(const Config&, const Config&) -> bool = default;
};

/// `key = value` lines; '#' starts a comment; blank lines ignored.
auto parse_config(std::string_view text, Config base = {}) -> Config;
auto read_config(const std::string& path, Config base = {}) -> Config;

/// Every key in keys() order, one `key = value` line each. Numbers use
/// the shortest round-trip form so parse_config(format_config(c)) == c.
auto format_config(const Config& config) -> std::string;

} // namespace ner

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

#include "ner/checkpoint.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ner {

struct EpochRecord
{
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double learning_rate = 0.0;

    friend auto operator==(const EpochRecord&, const EpochRecord&) -> bool = default;
};

template <typename Real>
struct TrainResult
{
    /// Header (config echo, one "# key = value" per line) followed by
    /// one tab-separated row per epoch.
    std::string log;
    std::vector<EpochRecord> epochs;
    BestRecord best;
    std::vector<std::uint8_t> best_checkpoint;
    std::vector<std::uint8_t> final_checkpoint;
};

using LogSink = std::function<void(const std::string& line)>;

/// Mini-batch NLL training with Nadam and the two-phase schedule. The
/// per-sentence losses of a batch are summed and divided by the batch
/// token count before the update. After each epoch the validation loss
/// (mean NLL per token) is measured; the lowest one so far selects the
/// best checkpoint. When config.checkpoint is non-empty the best model
/// is written there and the last epoch to `checkpoint + ".final"`.
template <typename Real>
auto train_model(const Config& config,
                 const Corpus& train,
                 const Corpus& validation,
                 const EmbeddingTable<Real>* pretrained,
                 const LogSink& sink = {}) -> TrainResult<Real>;

auto format_epoch_line(const EpochRecord& record) -> std::string;

} // namespace ner

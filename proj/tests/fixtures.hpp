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

// Shared small-model setup for training, persistence and acceptance.

#pragma once

#include "ner/config.hpp"
#include "ner/data.hpp"

#include <cstddef>

namespace fixture {

/// Reduced dimensions that train in well under a second per epoch.
inline auto small_config(std::size_t epochs) -> ner::Config
{
    ner::Config c;
    c.word_dim = 20;
    c.hidden_word = 16;
    c.hidden_char = 8;
    c.char_dim = 12;
    c.batch_size = 8;
    c.epochs = epochs;
    c.freeze_embeddings = false;
    c.seed = 7;
    return c;
}

inline auto train_corpus(std::size_t n = 200) -> ner::Corpus
{
    return ner::synth_corpus(101, n);
}

inline auto validation_corpus(std::size_t n = 50) -> ner::Corpus
{
    return ner::synth_corpus(202, n);
}

} // namespace fixture

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

// Binary checkpoint layout (all integers and reals little-endian):
//
//     "NERCKPT\0"            8-byte magic
//     u32 version
//     u64 payload length
//     payload
//     u32 CRC-32 of payload
//
// The payload holds, in order: the config text, the word and character
// vocabularies, the POS/chunk/label inventories, the word-table
// trainable flag, every named parameter tensor (name, rank, extents,
// element width 4 or 8, row-major values), an optional Nadam state,
// and the best-validation record.

#pragma once

#include "ner/model.hpp"
#include "ner/optim.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ner {

inline constexpr std::uint32_t checkpoint_version = 1;

struct BestRecord
{
    std::int64_t epoch = -1;
    double validation_loss = 0.0;

    friend auto operator==(const BestRecord&, const BestRecord&) -> bool = default;
};

template <typename Real>
struct Checkpoint
{
    NerModel<Real> model;
    std::optional<NadamState<Real>> optimizer;
    BestRecord best;
};

/// Serializes with element width sizeof(Real).
template <typename Real>
auto encode_checkpoint(const NerModel<Real>& model,
                       const NadamState<Real>* optimizer,
                       const BestRecord& best) -> std::vector<std::uint8_t>;

/// IntegrityError on bad magic, unsupported version, truncation, CRC
/// mismatch or inconsistent contents. Nothing partial is returned.
template <typename Real>
auto decode_checkpoint(const std::vector<std::uint8_t>& bytes) -> Checkpoint<Real>;

/// Config stored in a checkpoint, without decoding the tensors.
auto peek_checkpoint_config(const std::vector<std::uint8_t>& bytes) -> Config;

template <typename Real>
void save_checkpoint(const std::string& path,
                     const NerModel<Real>& model,
                     const NadamState<Real>* optimizer,
                     const BestRecord& best);

template <typename Real>
auto load_checkpoint(const std::string& path) -> Checkpoint<Real>;

auto read_file_bytes(const std::string& path) -> std::vector<std::uint8_t>;
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

} // namespace ner

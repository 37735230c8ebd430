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

// Chunk-level scoring with conlleval semantics: a predicted entity is
// correct only if its type, start and end all match a gold entity.

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ner {

struct ChunkSpan
{
    std::string type;
    std::size_t start; // inclusive
    std::size_t end;   // exclusive

    friend auto operator<=>(const ChunkSpan&, const ChunkSpan&) = default;
};

/// Maximal B-X (I-X)* runs. An I-X that does not continue an open X
/// chunk starts a new one; O closes any open chunk.
auto extract_chunks(std::span<const std::string> tags) -> std::vector<ChunkSpan>;

/// IOB2 rendering of non-overlapping spans over `length` tokens.
auto spans_to_tags(std::span<const ChunkSpan> spans, std::size_t length)
  -> std::vector<std::string>;

struct ChunkCounts
{
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    /// Percentages; 0 when the denominator is 0.
    [[nodiscard]] auto precision() const -> double;
    [[nodiscard]] auto recall() const -> double;
    [[nodiscard]] auto f1() const -> double;

    friend auto operator==(const ChunkCounts&, const ChunkCounts&) -> bool = default;
};

struct MetricsReport
{
    /// Rows in display order LOC, PER, ORG, MISC.
    std::array<std::string, 4> types { "LOC", "PER", "ORG", "MISC" };
    std::array<ChunkCounts, 4> per_type {};
    /// Pooled over all types.
    ChunkCounts total {};

    [[nodiscard]] auto counts(const std::string& type) const -> const ChunkCounts&;

    friend auto operator==(const MetricsReport&, const MetricsReport&) -> bool = default;
};

using TagSequences = std::vector<std::vector<std::string>>;

/// Throws ValidationError if the sequences are not aligned.
auto f1_report(const TagSequences& gold, const TagSequences& pred) -> MetricsReport;

/// Rounds half away from zero to 2 decimals.
auto round2(double percent) -> double;

/// Precision / Recall / F1-Score table, one row per type plus Avg/total.
auto format_report(const MetricsReport& report) -> std::string;

/// Raw TP/FP/FN counts and the derived metrics as JSON.
auto report_json(const MetricsReport& report) -> std::string;

} // namespace ner

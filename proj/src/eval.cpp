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

#include "ner/eval.hpp"

#include "ner/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>

namespace ner {

auto extract_chunks(std::span<const std::string> tags) -> std::vector<ChunkSpan>
{
    std::vector<ChunkSpan> out;
    std::optional<ChunkSpan> open;
    const auto close = [&](std::size_t end) {
        if (open) {
            open->end = end;
            out.push_back(std::move(*open));
            open.reset();
        }
    };
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const std::string& tag = tags[i];
        const bool begin = tag.size() > 2 && tag[0] == 'B' && tag[1] == '-';
        const bool inside = tag.size() > 2 && tag[0] == 'I' && tag[1] == '-';
        if (!begin && !inside) {
            close(i);
            continue;
        }
        const std::string type = tag.substr(2);
        if (inside && open && open->type == type) {
            continue;
        }
        close(i);
        open = ChunkSpan { type, i, i + 1 };
    }
    close(tags.size());
    return out;
}

auto spans_to_tags(std::span<const ChunkSpan> spans, std::size_t length)
  -> std::vector<std::string>
{
    std::vector<std::string> tags(length, "O");
    for (const auto& s : spans) {
        if (s.start >= s.end || s.end > length) {
            throw ValidationError("span outside a sequence of length "
                                  + std::to_string(length));
        }
        tags[s.start] = "B-" + s.type;
        for (std::size_t i = s.start + 1; i < s.end; ++i) {
            tags[i] = "I-" + s.type;
        }
    }
    return tags;
}

auto ChunkCounts::precision() const -> double
{
    return tp + fp == 0 ? 0.0
                        : 100.0 * static_cast<double>(tp)
                            / static_cast<double>(tp + fp);
}

auto ChunkCounts::recall() const -> double
{
    return tp + fn == 0 ? 0.0
                        : 100.0 * static_cast<double>(tp)
                            / static_cast<double>(tp + fn);
}

auto ChunkCounts::f1() const -> double
{
    const double p = precision();
    const double r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

auto MetricsReport::counts(const std::string& type) const -> const ChunkCounts&
{
    for (std::size_t i = 0; i < types.size(); ++i) {
        if (types[i] == type) {
            return per_type[i];
        }
    }
    throw ValidationError("unknown entity type '" + type + "'");
}

auto f1_report(const TagSequences& gold, const TagSequences& pred) -> MetricsReport
{
    if (gold.size() != pred.size()) {
        throw ValidationError("gold has " + std::to_string(gold.size())
                              + " sentences, predictions have "
                              + std::to_string(pred.size()));
    }
    MetricsReport report;
    const auto slot = [&](const std::string& type) -> ChunkCounts* {
        for (std::size_t i = 0; i < report.types.size(); ++i) {
            if (report.types[i] == type) {
                return &report.per_type[i];
            }
        }
        return nullptr;
    };
    for (std::size_t s = 0; s < gold.size(); ++s) {
        if (gold[s].size() != pred[s].size()) {
            throw ValidationError(
              "sentence " + std::to_string(s) + ": gold length "
              + std::to_string(gold[s].size()) + ", predicted length "
              + std::to_string(pred[s].size()));
        }
        const auto g = extract_chunks(gold[s]);
        const auto p = extract_chunks(pred[s]);
        const std::set<ChunkSpan> gold_set(g.begin(), g.end());
        const std::set<ChunkSpan> pred_set(p.begin(), p.end());
        for (const auto& span : pred_set) {
            auto* c = slot(span.type);
            const bool hit = gold_set.contains(span);
            if (c != nullptr) {
                (hit ? c->tp : c->fp) += 1;
            }
            (hit ? report.total.tp : report.total.fp) += 1;
        }
        for (const auto& span : gold_set) {
            if (!pred_set.contains(span)) {
                if (auto* c = slot(span.type)) {
                    c->fn += 1;
                }
                report.total.fn += 1;
            }
        }
    }
    return report;
}

auto round2(double percent) -> double
{
    // The nudge keeps values such as 66.665 (stored as 66.66499...) from
    // rounding down.
    const double scaled = std::abs(percent) * 100.0;
    const double r = std::floor(scaled + 0.5 + 1e-9) / 100.0;
    return std::copysign(r, percent);
}

auto format_report(const MetricsReport& report) -> std::string
{
    std::string out =
      fmt::format("{:<10}{:>10}{:>10}{:>10}\n", "", "Precision", "Recall", "F1-Score");
    const auto line = [&](const std::string& label, const ChunkCounts& c) {
        out += fmt::format("{:<10}{:>10.2f}{:>10.2f}{:>10.2f}\n",
                           label,
                           round2(c.precision()),
                           round2(c.recall()),
                           round2(c.f1()));
    };
    for (std::size_t i = 0; i < report.types.size(); ++i) {
        line(report.types[i], report.per_type[i]);
    }
    line("Avg/total", report.total);
    return out;
}

auto report_json(const MetricsReport& report) -> std::string
{
    const auto row = [](const ChunkCounts& c) {
        return nlohmann::json { { "tp", c.tp },
                                { "fp", c.fp },
                                { "fn", c.fn },
                                { "precision", round2(c.precision()) },
                                { "recall", round2(c.recall()) },
                                { "f1", round2(c.f1()) } };
    };
    nlohmann::json j;
    for (std::size_t i = 0; i < report.types.size(); ++i) {
        j[report.types[i]] = row(report.per_type[i]);
    }
    j["total"] = row(report.total);
    return j.dump();
}

} // namespace ner

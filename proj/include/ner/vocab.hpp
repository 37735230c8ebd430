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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ner {

/// Ordered set of distinct symbols with dense indices 0..size()-1.
/// Used for tag inventories, where there is no reserved entry.
class SymbolTable
{
public:
    SymbolTable() = default;
    explicit SymbolTable(const std::vector<std::string>& symbols);

    /// Index of `symbol`, inserting it at the end if new.
    auto add(std::string_view symbol) -> std::size_t;
    [[nodiscard]] auto find(std::string_view symbol) const
      -> std::optional<std::size_t>;
    [[nodiscard]] auto contains(std::string_view symbol) const -> bool
    {
        return find(symbol).has_value();
    }
    [[nodiscard]] auto symbol(std::size_t index) const -> const std::string&;
    [[nodiscard]] auto size() const noexcept -> std::size_t
    {
        return symbols_.size();
    }
    [[nodiscard]] auto empty() const noexcept -> bool { return symbols_.empty(); }
    [[nodiscard]] auto symbols() const noexcept
      -> const std::vector<std::string>&
    {
        return symbols_;
    }

    friend auto operator==(const SymbolTable& a, const SymbolTable& b) -> bool
    {
        return a.symbols_ == b.symbols_;
    }

private:
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Vocabulary with two reserved entries: index 0 is UNK and index 1 is
/// PAD. Regular symbols occupy indices 2 and up; lookups of unseen
/// symbols return UNK.
class Vocab
{
public:
    static constexpr std::size_t unk = 0;
    static constexpr std::size_t pad = 1;
    static constexpr std::string_view unk_symbol = "<unk>";
    static constexpr std::string_view pad_symbol = "<pad>";

    Vocab();
    /// Builds from regular symbols (reserved entries are implied).
    explicit Vocab(const std::vector<std::string>& symbols);

    auto add(std::string_view symbol) -> std::size_t;
    [[nodiscard]] auto index(std::string_view symbol) const -> std::size_t;
    [[nodiscard]] auto contains(std::string_view symbol) const -> bool;
    [[nodiscard]] auto symbol(std::size_t index) const -> const std::string&;
    [[nodiscard]] auto size() const noexcept -> std::size_t
    {
        return table_.size();
    }
    /// Regular symbols in index order (without UNK/PAD).
    [[nodiscard]] auto regular_symbols() const -> std::vector<std::string>;

    friend auto operator==(const Vocab& a, const Vocab& b) -> bool
    {
        return a.table_ == b.table_;
    }

private:
    SymbolTable table_;
};

struct TagInventory
{
    SymbolTable pos;
    SymbolTable chunk;

    friend auto operator==(const TagInventory&, const TagInventory&)
      -> bool = default;
};

namespace utf8 {

/// Byte offset of the first invalid sequence, or nullopt if valid.
auto first_invalid(std::string_view text) -> std::optional<std::size_t>;

/// Splits into code points, each returned as its UTF-8 encoding.
auto characters(std::string_view text) -> std::vector<std::string>;

/// Lowercases ASCII and the Latin ranges used by Vietnamese
/// (Latin-1, Latin Extended-A/B letters with case pairs, and the
/// Latin Extended Additional block U+1E00-U+1EFF).
auto to_lower(std::string_view text) -> std::string;

} // namespace utf8

} // namespace ner

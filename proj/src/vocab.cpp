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

#include "ner/vocab.hpp"

#include "ner/errors.hpp"

#include <cstdint>

namespace ner {

SymbolTable::SymbolTable(const std::vector<std::string>& symbols)
{
    for (const auto& s : symbols) {
        if (contains(s)) {
            throw ValidationError("duplicate symbol '" + s + "'");
        }
        add(s);
    }
}

auto SymbolTable::add(std::string_view symbol) -> std::size_t
{
    if (auto found = find(symbol)) {
        return *found;
    }
    const std::size_t idx = symbols_.size();
    symbols_.emplace_back(symbol);
    index_.emplace(symbols_.back(), idx);
    return idx;
}

auto SymbolTable::find(std::string_view symbol) const
  -> std::optional<std::size_t>
{
    const auto it = index_.find(std::string(symbol));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

auto SymbolTable::symbol(std::size_t index) const -> const std::string&
{
    return symbols_.at(index);
}

Vocab::Vocab()
{
    table_.add(unk_symbol);
    table_.add(pad_symbol);
}

Vocab::Vocab(const std::vector<std::string>& symbols) : Vocab()
{
    for (const auto& s : symbols) {
        if (table_.contains(s)) {
            throw ValidationError("duplicate or reserved vocabulary symbol '"
                                  + s + "'");
        }
        table_.add(s);
    }
}

auto Vocab::add(std::string_view symbol) -> std::size_t
{
    return table_.add(symbol);
}

auto Vocab::index(std::string_view symbol) const -> std::size_t
{
    return table_.find(symbol).value_or(unk);
}

auto Vocab::contains(std::string_view symbol) const -> bool
{
    const auto idx = table_.find(symbol);
    return idx.has_value() && *idx > pad;
}

auto Vocab::symbol(std::size_t index) const -> const std::string&
{
    return table_.symbol(index);
}

auto Vocab::regular_symbols() const -> std::vector<std::string>
{
    const auto& all = table_.symbols();
    return { all.begin() + 2, all.end() };
}

namespace utf8 {

namespace {

// Length of the sequence starting at `lead`, or 0 if `lead` cannot
// start one.
auto sequence_length(unsigned char lead) -> std::size_t
{
    if (lead < 0x80U) {
        return 1;
    }
    if ((lead & 0xE0U) == 0xC0U) {
        return lead >= 0xC2U ? 2 : 0;
    }
    if ((lead & 0xF0U) == 0xE0U) {
        return 3;
    }
    if ((lead & 0xF8U) == 0xF0U) {
        return lead <= 0xF4U ? 4 : 0;
    }
    return 0;
}

auto decode(std::string_view s, std::size_t pos, std::size_t len)
  -> std::uint32_t
{
    const auto b = [&](std::size_t i) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i]));
    };
    switch (len) {
    case 1:
        return b(0);
    case 2:
        return ((b(0) & 0x1FU) << 6U) | (b(1) & 0x3FU);
    case 3:
        return ((b(0) & 0x0FU) << 12U) | ((b(1) & 0x3FU) << 6U) | (b(2) & 0x3FU);
    default:
        return ((b(0) & 0x07U) << 18U) | ((b(1) & 0x3FU) << 12U)
               | ((b(2) & 0x3FU) << 6U) | (b(3) & 0x3FU);
    }
}

void encode(std::uint32_t cp, std::string& out)
{
    if (cp < 0x80U) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800U) {
        out += static_cast<char>(0xC0U | (cp >> 6U));
        out += static_cast<char>(0x80U | (cp & 0x3FU));
    } else if (cp < 0x10000U) {
        out += static_cast<char>(0xE0U | (cp >> 12U));
        out += static_cast<char>(0x80U | ((cp >> 6U) & 0x3FU));
        out += static_cast<char>(0x80U | (cp & 0x3FU));
    } else {
        out += static_cast<char>(0xF0U | (cp >> 18U));
        out += static_cast<char>(0x80U | ((cp >> 12U) & 0x3FU));
        out += static_cast<char>(0x80U | ((cp >> 6U) & 0x3FU));
        out += static_cast<char>(0x80U | (cp & 0x3FU));
    }
}

auto lower(std::uint32_t cp) -> std::uint32_t
{
    if (cp >= 'A' && cp <= 'Z') {
        return cp + 0x20U;
    }
    if (cp >= 0xC0U && cp <= 0xDEU && cp != 0xD7U) {
        return cp + 0x20U;
    }
    // Latin Extended-A: upper case at even code points, except for the
    // U+0139-U+0148 and U+0179-U+017E runs which are odd-upper.
    if (cp >= 0x100U && cp <= 0x137U && cp % 2 == 0) {
        return cp + 1;
    }
    if (cp >= 0x139U && cp <= 0x148U && cp % 2 == 1) {
        return cp + 1;
    }
    if (cp >= 0x14AU && cp <= 0x177U && cp % 2 == 0) {
        return cp + 1;
    }
    if (cp >= 0x179U && cp <= 0x17EU && cp % 2 == 1) {
        return cp + 1;
    }
    // O-horn and U-horn.
    if (cp == 0x1A0U || cp == 0x1AFU) {
        return cp + 1;
    }
    if (cp >= 0x1E00U && cp <= 0x1EFFU && cp % 2 == 0) {
        return cp + 1;
    }
    return cp;
}

} // namespace

auto first_invalid(std::string_view text) -> std::optional<std::size_t>
{
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto len = sequence_length(static_cast<unsigned char>(text[pos]));
        if (len == 0 || pos + len > text.size()) {
            return pos;
        }
        for (std::size_t i = 1; i < len; ++i) {
            if ((static_cast<unsigned char>(text[pos + i]) & 0xC0U) != 0x80U) {
                return pos;
            }
        }
        const auto cp = decode(text, pos, len);
        const bool overlong = (len == 3 && cp < 0x800U)
                              || (len == 4 && cp < 0x10000U);
        const bool surrogate = cp >= 0xD800U && cp <= 0xDFFFU;
        if (overlong || surrogate || cp > 0x10FFFFU) {
            return pos;
        }
        pos += len;
    }
    return std::nullopt;
}

auto characters(std::string_view text) -> std::vector<std::string>
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto len = sequence_length(static_cast<unsigned char>(text[pos]));
        if (len == 0 || pos + len > text.size()) {
            len = 1; // stray byte becomes its own symbol
        }
        out.emplace_back(text.substr(pos, len));
        pos += len;
    }
    return out;
}

auto to_lower(std::string_view text) -> std::string
{
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto len = sequence_length(static_cast<unsigned char>(text[pos]));
        if (len == 0 || pos + len > text.size()) {
            out += text[pos];
            ++pos;
            continue;
        }
        encode(lower(decode(text, pos, len)), out);
        pos += len;
    }
    return out;
}

} // namespace utf8

} // namespace ner

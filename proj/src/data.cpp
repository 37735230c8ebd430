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

#include "ner/data.hpp"

#include "ner/errors.hpp"
#include "ner/rng.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace ner {

auto canonical_labels() -> const std::vector<std::string>&
{
    static const std::vector<std::string> labels = [] {
        std::vector<std::string> out { "O" };
        for (const auto type : entity_types) {
            out.push_back("B-" + std::string(type));
            out.push_back("I-" + std::string(type));
        }
        return out;
    }();
    return labels;
}

auto is_iob2_tag(std::string_view tag) -> bool
{
    if (tag == "O") {
        return true;
    }
    if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') {
        return false;
    }
    const auto type = tag.substr(2);
    return std::find(entity_types.begin(), entity_types.end(), type)
           != entity_types.end();
}

auto Sentence::ner_tags() const -> std::vector<std::string>
{
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        out.push_back(t.ner);
    }
    return out;
}

auto Corpus::from_sentences(std::vector<Sentence> sentences) -> Corpus
{
    Corpus corpus;
    std::unordered_set<std::string> seen_labels;
    for (const auto& s : sentences) {
        for (const auto& t : s.tokens) {
            corpus.words.add(t.surface);
            for (const auto& ch : utf8::characters(t.surface)) {
                corpus.chars.add(ch);
            }
            corpus.tags.pos.add(t.pos);
            corpus.tags.chunk.add(t.chunk);
            seen_labels.insert(t.ner);
        }
    }
    for (const auto& label : canonical_labels()) {
        if (label == "O" || seen_labels.contains(label)) {
            corpus.labels.add(label);
        }
    }
    corpus.sentences = std::move(sentences);
    return corpus;
}

auto Corpus::token_count() const -> std::size_t
{
    std::size_t n = 0;
    for (const auto& s : sentences) {
        n += s.size();
    }
    return n;
}

namespace {

auto split_fields(std::string_view line) -> std::vector<std::string>
{
    std::vector<std::string> fields;
    if (line.find('\t') != std::string_view::npos) {
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            fields.emplace_back(line.substr(start, tab - start));
            if (tab == std::string_view::npos) {
                break;
            }
            start = tab + 1;
        }
        return fields;
    }
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && line[pos] == ' ') {
            ++pos;
        }
        if (pos == line.size()) {
            break;
        }
        const auto end = std::min(line.find(' ', pos), line.size());
        fields.emplace_back(line.substr(pos, end - pos));
        pos = end;
    }
    return fields;
}

auto is_blank(std::string_view line) -> bool
{
    return std::all_of(line.begin(), line.end(), [](char c) {
        return c == ' ' || c == '\t';
    });
}

auto line_of_offset(std::string_view text, std::size_t offset) -> std::size_t
{
    return 1
           + static_cast<std::size_t>(
             std::count(text.begin(),
                        text.begin() + static_cast<std::ptrdiff_t>(offset),
                        '\n'));
}

} // namespace

auto parse_conll(std::string_view text, const ParseOptions& options) -> Corpus
{
    if (const auto bad = utf8::first_invalid(text)) {
        throw ParseError(line_of_offset(text, *bad), "invalid UTF-8");
    }

    std::vector<Sentence> sentences;
    std::vector<std::string> repairs;
    Sentence current;
    std::vector<std::size_t> current_lines;

    const auto flush = [&] {
        if (current.tokens.empty()) {
            return;
        }
        if (!options.ner_optional) {
            const auto tags = current.ner_tags();
            for (const auto& v : validate_bio(tags)) {
                auto& tok = current.tokens[v.position];
                const std::string fixed = "B-" + tok.ner.substr(2);
                repairs.push_back("line "
                                  + std::to_string(current_lines[v.position])
                                  + ": promoted " + tok.ner + " to " + fixed);
                tok.ner = fixed;
            }
        }
        sentences.push_back(std::move(current));
        current = Sentence {};
        current_lines.clear();
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (is_blank(line)) {
            flush();
            if (nl == text.size()) {
                break;
            }
            continue;
        }
        auto fields = split_fields(line);
        const bool count_ok = fields.size() == 4
                              || (options.ner_optional && fields.size() == 3);
        if (!count_ok) {
            throw ParseError(line_no,
                             "expected "
                               + std::string(options.ner_optional ? "3 or 4"
                                                                  : "4")
                               + " fields, found "
                               + std::to_string(fields.size()));
        }
        for (const auto& f : fields) {
            if (f.empty()) {
                throw ParseError(line_no, "empty field");
            }
        }
        Token tok { fields[0], fields[1], fields[2], "O" };
        if (!options.ner_optional) {
            if (!is_iob2_tag(fields[3])) {
                throw ValidationError("line " + std::to_string(line_no)
                                      + ": invalid NER tag '" + fields[3]
                                      + "'");
            }
            tok.ner = fields[3];
        }
        current.tokens.push_back(std::move(tok));
        current_lines.push_back(line_no);
        if (nl == text.size()) {
            break;
        }
    }
    flush();

    auto corpus = Corpus::from_sentences(std::move(sentences));
    corpus.repairs = std::move(repairs);
    return corpus;
}

auto read_conll(const std::string& path, const ParseOptions& options) -> Corpus
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_conll(buf.str(), options);
}

auto serialize_conll(std::span<const Sentence> sentences) -> std::string
{
    std::string out;
    for (const auto& s : sentences) {
        for (const auto& t : s.tokens) {
            out += t.surface;
            out += '\t';
            out += t.pos;
            out += '\t';
            out += t.chunk;
            out += '\t';
            out += t.ner;
            out += '\n';
        }
        out += '\n';
    }
    return out;
}

auto validate_bio(std::span<const std::string> tags) -> std::vector<BioViolation>
{
    std::vector<BioViolation> out;
    std::string_view open_type;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const std::string_view tag = tags[i];
        if (tag.size() > 2 && tag[0] == 'I' && tag[1] == '-') {
            const auto type = tag.substr(2);
            if (type != open_type) {
                out.push_back({ i,
                                open_type.empty()
                                  ? std::string(tag) + " does not continue an entity"
                                  : std::string(tag) + " follows an entity of type "
                                      + std::string(open_type) });
            }
            open_type = type;
        } else if (tag.size() > 2 && tag[0] == 'B' && tag[1] == '-') {
            open_type = tag.substr(2);
        } else {
            open_type = {};
        }
    }
    return out;
}

auto Batch::token_count() const -> std::size_t
{
    return static_cast<std::size_t>(
      std::count(mask.begin(), mask.end(), std::uint8_t { 1 }));
}

auto make_batches(const Corpus& corpus,
                  const Vocab& words,
                  std::size_t batch_size,
                  std::optional<std::uint64_t> shuffle_seed) -> std::vector<Batch>
{
    if (batch_size == 0) {
        throw ParameterError("batch size must be at least 1");
    }
    std::vector<std::size_t> order(corpus.sentences.size());
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    if (shuffle_seed) {
        Rng rng { *shuffle_seed };
        rng.shuffle(order);
    }

    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        Batch b;
        const auto end = std::min(order.size(), start + batch_size);
        b.sentence_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                              order.begin() + static_cast<std::ptrdiff_t>(end));
        for (const auto id : b.sentence_ids) {
            b.max_length = std::max(b.max_length, corpus.sentences[id].size());
        }
        b.word_ids.assign(b.sentence_ids.size() * b.max_length, Vocab::pad);
        b.mask.assign(b.sentence_ids.size() * b.max_length, 0);
        for (std::size_t r = 0; r < b.sentence_ids.size(); ++r) {
            const auto& s = corpus.sentences[b.sentence_ids[r]];
            for (std::size_t t = 0; t < s.size(); ++t) {
                b.word_ids[r * b.max_length + t] = words.index(s.tokens[t].surface);
                b.mask[r * b.max_length + t] = 1;
            }
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

namespace {

struct EntityLexicon
{
    std::string_view type;
    std::vector<std::string_view> heads;
    std::vector<std::string_view> tails;
    std::size_t min_tails;
    std::size_t max_tails;
};

struct OutsideWord
{
    std::string_view surface;
    std::string_view pos;
    std::string_view chunk;
};

// Entity tokens never coincide with outside words, heads never coincide
// with tails, and entities are always separated by outside words, so
// every tag can be read off the surface forms.
auto entity_lexicons() -> const std::vector<EntityLexicon>&
{
    static const std::vector<EntityLexicon> lexicons = {
        { "PER",
          { "Nguyễn_Văn", "Trần_Thị", "Lê_Minh", "Phạm_Quốc", "Hoàng_Thu",
            "Vũ_Đức", "Đặng_Ngọc", "Bùi_Thanh" },
          { "An", "Bình", "Cường", "Dung", "Hải", "Lan", "Phong", "Tâm" },
          0,
          1 },
        { "LOC",
          { "Hà_Nội", "Đà_Nẵng", "Huế", "Cần_Thơ", "Hải_Phòng", "Nha_Trang",
            "Quảng_Ninh", "Lạng_Sơn" },
          { "Bắc", "Nam", "Trung", "Thượng" },
          0,
          1 },
        { "ORG",
          { "Công_ty", "Ngân_hàng", "Tập_đoàn", "Viện", "Trường", "Hội" },
          { "Vinamilk", "Techcombank", "FPT", "Viettel", "Bách_Khoa",
            "Sông_Đà" },
          1,
          2 },
        { "MISC",
          { "tiếng_Việt", "người_Kinh", "Tết", "Phật_giáo", "Covid-19",
            "Euro" },
          { "Nguyên_Đán", "Trung_Thu", "thế_kỷ" },
          0,
          1 },
    };
    return lexicons;
}

auto outside_words() -> const std::vector<OutsideWord>&
{
    static const std::vector<OutsideWord> words = {
        { "người", "N", "B-NP" },      { "công_việc", "N", "B-NP" },
        { "thành_phố", "N", "B-NP" },  { "kinh_tế", "N", "B-NP" },
        { "dự_án", "N", "B-NP" },      { "năm", "N", "B-NP" },
        { "báo_cáo", "N", "B-NP" },    { "thị_trường", "N", "B-NP" },
        { "khách_hàng", "N", "B-NP" }, { "chính_phủ", "N", "B-NP" },
        { "đến", "V", "B-VP" },        { "thăm", "V", "B-VP" },
        { "làm_việc", "V", "B-VP" },   { "công_bố", "V", "B-VP" },
        { "phát_triển", "V", "B-VP" }, { "nói", "V", "B-VP" },
        { "ký", "V", "B-VP" },         { "gặp", "V", "B-VP" },
        { "hợp_tác", "V", "B-VP" },    { "tổ_chức", "V", "B-VP" },
        { "lớn", "A", "B-AP" },        { "mới", "A", "B-AP" },
        { "quan_trọng", "A", "B-AP" }, { "nhanh", "A", "B-AP" },
        { "tại", "E", "B-PP" },        { "với", "E", "B-PP" },
        { "của", "E", "B-PP" },        { "cho", "E", "B-PP" },
        { "và", "C", "O" },            { "nhưng", "C", "O" },
        { "đã", "R", "O" },            { "sẽ", "R", "O" },
        { "đang", "R", "O" },          { "rất", "R", "O" },
        { ",", "CH", "O" },
    };
    return words;
}

} // namespace

auto synth_corpus(std::uint64_t seed, std::size_t n_sentences) -> Corpus
{
    if (n_sentences == 0) {
        throw ParameterError("synthetic corpus needs at least one sentence");
    }
    Rng rng { seed };
    const auto& lexicons = entity_lexicons();
    const auto& fillers = outside_words();

    const auto add_filler = [&](Sentence& s) {
        const auto count = 1 + rng.below(3);
        for (std::size_t i = 0; i < count; ++i) {
            const auto& w = fillers[rng.below(fillers.size())];
            s.tokens.push_back({ std::string(w.surface),
                                 std::string(w.pos),
                                 std::string(w.chunk),
                                 "O" });
        }
    };

    std::vector<Sentence> sentences;
    sentences.reserve(n_sentences);
    for (std::size_t n = 0; n < n_sentences; ++n) {
        Sentence s;
        add_filler(s);
        const auto entities = 1 + rng.below(3);
        for (std::size_t e = 0; e < entities; ++e) {
            const auto& lex = lexicons[rng.below(lexicons.size())];
            const std::string type { lex.type };
            s.tokens.push_back({ std::string(lex.heads[rng.below(lex.heads.size())]),
                                 "Np",
                                 "B-NP",
                                 "B-" + type });
            const auto tails =
              lex.min_tails + rng.below(lex.max_tails - lex.min_tails + 1);
            for (std::size_t t = 0; t < tails; ++t) {
                s.tokens.push_back(
                  { std::string(lex.tails[rng.below(lex.tails.size())]),
                    "Np",
                    "I-NP",
                    "I-" + type });
            }
            add_filler(s);
        }
        s.tokens.push_back({ ".", "CH", "O", "O" });
        sentences.push_back(std::move(s));
    }
    return Corpus::from_sentences(std::move(sentences));
}

} // namespace ner

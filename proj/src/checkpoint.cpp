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

#include "ner/checkpoint.hpp"

#include "ner/errors.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <zlib.h>

namespace ner {

namespace {

constexpr std::array<std::uint8_t, 8> magic = { 'N', 'E', 'R', 'C',
                                                'K', 'P', 'T', 0 };
constexpr std::size_t header_size = magic.size() + 4 + 8;

class Writer
{
public:
    void u8(std::uint8_t v) { out_.push_back(v); }

    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

    void f32(float v)
    {
        std::uint32_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        u32(bits);
    }

    void f64(double v)
    {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }

    template <typename Real>
    void real(Real v)
    {
        if constexpr (sizeof(Real) == 4) {
            f32(v);
        } else {
            f64(v);
        }
    }

    void str(const std::string& s)
    {
        u64(s.size());
        out_.insert(out_.end(), s.begin(), s.end());
    }

    void strings(const std::vector<std::string>& list)
    {
        u64(list.size());
        for (const auto& s : list) {
            str(s);
        }
    }

    [[nodiscard]] auto bytes() -> std::vector<std::uint8_t>& { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

class Reader
{
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_ { data }, size_ { size }
    {}

    auto u8() -> std::uint8_t
    {
        need(1);
        return data_[pos_++];
    }

    auto u32() -> std::uint32_t
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
        }
        return v;
    }

    auto u64() -> std::uint64_t
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
        }
        return v;
    }

    auto i64() -> std::int64_t { return static_cast<std::int64_t>(u64()); }

    auto f32() -> float
    {
        const auto bits = u32();
        float v = 0;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    auto f64() -> double
    {
        const auto bits = u64();
        double v = 0;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    /// Value stored with element width `width`, converted to Real.
    template <typename Real>
    auto real(std::uint8_t width) -> Real
    {
        return width == 4 ? static_cast<Real>(f32()) : static_cast<Real>(f64());
    }

    auto str() -> std::string
    {
        const auto n = u64();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

    auto strings() -> std::vector<std::string>
    {
        const auto n = u64();
        std::vector<std::string> out;
        for (std::uint64_t i = 0; i < n; ++i) {
            out.push_back(str());
        }
        return out;
    }

    [[nodiscard]] auto done() const -> bool { return pos_ == size_; }

private:
    void need(std::uint64_t n) const
    {
        if (n > size_ - pos_) {
            throw IntegrityError("checkpoint payload is truncated");
        }
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

auto checksum(const std::uint8_t* data, std::size_t size) -> std::uint32_t
{
    return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(size)));
}

// Validates framing and returns a reader over the payload.
auto open_payload(const std::vector<std::uint8_t>& bytes) -> Reader
{
    if (bytes.size() < header_size + 4
        || !std::equal(magic.begin(), magic.end(), bytes.begin())) {
        throw IntegrityError("not a checkpoint file (bad magic or too short)");
    }
    Reader header { bytes.data() + magic.size(), 12 };
    const auto version = header.u32();
    if (version != checkpoint_version) {
        throw IntegrityError("unsupported checkpoint version "
                             + std::to_string(version) + " (this build reads version "
                             + std::to_string(checkpoint_version) + ")");
    }
    const auto length = header.u64();
    if (length != bytes.size() - header_size - 4) {
        throw IntegrityError("checkpoint length mismatch: header says "
                             + std::to_string(length) + " payload bytes, file has "
                             + std::to_string(bytes.size() - header_size - 4));
    }
    const auto* payload = bytes.data() + header_size;
    Reader trailer { payload + length, 4 };
    if (trailer.u32() != checksum(payload, length)) {
        throw IntegrityError("checkpoint checksum mismatch");
    }
    return { payload, length };
}

template <typename Real>
auto read_tensor(Reader& r) -> Tensor<Real>
{
    const auto rank = r.u32();
    if (rank == 0 || rank > 8) {
        throw IntegrityError("checkpoint tensor has invalid rank");
    }
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) {
        shape.push_back(r.u64());
    }
    const auto width = r.u8();
    if (width != 4 && width != 8) {
        throw IntegrityError("checkpoint tensor has invalid element width");
    }
    std::size_t n = 1;
    for (const auto e : shape) {
        if (e == 0 || n > (std::size_t { 1 } << 40U) / e) {
            throw IntegrityError("checkpoint tensor has invalid extents");
        }
        n *= e;
    }
    std::vector<Real> data;
    data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        data.push_back(r.real<Real>(width));
    }
    return { std::move(shape), std::move(data) };
}

} // namespace

template <typename Real>
auto encode_checkpoint(const NerModel<Real>& model,
                       const NadamState<Real>* optimizer,
                       const BestRecord& best) -> std::vector<std::uint8_t>
{
    Writer p;
    p.str(format_config(model.config));
    p.strings(model.words.vocab().regular_symbols());
    p.strings(model.chars.vocab().regular_symbols());
    p.strings(model.tags.pos.symbols());
    p.strings(model.tags.chunk.symbols());
    p.strings(model.labels.symbols());
    p.u8(model.words.trainable() ? 1 : 0);

    const auto params = model.named_parameters();
    p.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        p.str(name);
        p.u32(static_cast<std::uint32_t>(t.rank()));
        for (const auto e : t.shape()) {
            p.u64(e);
        }
        p.u8(sizeof(Real));
        for (const Real v : t.data()) {
            p.real(v);
        }
    }

    p.u8(optimizer != nullptr ? 1 : 0);
    if (optimizer != nullptr) {
        p.u64(optimizer->step);
        p.f64(optimizer->config.beta1);
        p.f64(optimizer->config.beta2);
        p.f64(optimizer->config.epsilon);
        p.u32(static_cast<std::uint32_t>(optimizer->m.size()));
        p.u8(sizeof(Real));
        for (std::size_t k = 0; k < optimizer->m.size(); ++k) {
            p.u64(optimizer->m[k].size());
            for (const Real v : optimizer->m[k]) {
                p.real(v);
            }
            for (const Real v : optimizer->v[k]) {
                p.real(v);
            }
        }
    }
    p.i64(best.epoch);
    p.f64(best.validation_loss);

    const auto& payload = p.bytes();
    Writer out;
    out.bytes().assign(magic.begin(), magic.end());
    out.u32(checkpoint_version);
    out.u64(payload.size());
    auto& bytes = out.bytes();
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    out.u32(checksum(payload.data(), payload.size()));
    return std::move(out.bytes());
}

auto peek_checkpoint_config(const std::vector<std::uint8_t>& bytes) -> Config
{
    auto r = open_payload(bytes);
    return parse_config(r.str());
}

template <typename Real>
auto decode_checkpoint(const std::vector<std::uint8_t>& bytes) -> Checkpoint<Real>
{
    auto r = open_payload(bytes);
    Checkpoint<Real> ck;
    auto& m = ck.model;
    try {
        m.config = parse_config(r.str());
        m.config.validate();
    } catch (const std::exception& e) {
        throw IntegrityError(std::string("checkpoint config: ") + e.what());
    }
    Vocab word_vocab;
    Vocab char_vocab;
    try {
        word_vocab = Vocab(r.strings());
        char_vocab = Vocab(r.strings());
        m.tags.pos = SymbolTable(r.strings());
        m.tags.chunk = SymbolTable(r.strings());
        m.labels = SymbolTable(r.strings());
    } catch (const ValidationError& e) {
        throw IntegrityError(std::string("checkpoint vocabulary: ") + e.what());
    }
    const bool words_trainable = r.u8() != 0;

    std::map<std::string, Tensor<Real>> stored;
    const auto n_tensors = r.u32();
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        auto name = r.str();
        auto t = read_tensor<Real>(r);
        stored.emplace(std::move(name), std::move(t));
    }

    const auto& cfg = m.config;
    const auto take = [&](const std::string& name) -> Tensor<Real> {
        const auto it = stored.find(name);
        if (it == stored.end()) {
            throw IntegrityError("checkpoint lacks tensor '" + name + "'");
        }
        return it->second;
    };
    try {
        m.words = EmbeddingTable<Real>(
          std::move(word_vocab), take("word_embedding"), words_trainable);
        m.chars = EmbeddingTable<Real>(
          std::move(char_vocab), take("char_embedding"), true);
    } catch (const DimensionError& e) {
        throw IntegrityError(std::string("checkpoint embeddings: ") + e.what());
    }
    if (m.words.dim() != cfg.word_dim || m.chars.dim() != cfg.char_dim) {
        throw IntegrityError("checkpoint embedding sizes disagree with its config");
    }
    m.char_layer = { LstmParams<Real>::zeros(cfg.char_dim, cfg.hidden_char),
                     LstmParams<Real>::zeros(cfg.char_dim, cfg.hidden_char) };
    const std::size_t features = m.feature_size();
    m.encoder = {
        { LstmParams<Real>::zeros(features, cfg.hidden_word),
          LstmParams<Real>::zeros(features, cfg.hidden_word) },
        { LstmParams<Real>::zeros(2 * cfg.hidden_word, cfg.hidden_word),
          LstmParams<Real>::zeros(2 * cfg.hidden_word, cfg.hidden_word) },
        cfg.dropout_bilstm,
    };
    m.crf = CrfParams<Real>::zeros(2 * cfg.hidden_word, m.labels.size());

    const auto params = m.named_parameters();
    if (params.size() != stored.size()) {
        throw IntegrityError("checkpoint holds " + std::to_string(stored.size())
                             + " tensors, model expects "
                             + std::to_string(params.size()));
    }
    for (auto [name, target] : params) {
        const auto source = take(name);
        if (source.shape() != target.shape()) {
            throw IntegrityError("checkpoint tensor '" + name + "' has shape "
                                 + shape_string(source.shape()) + ", expected "
                                 + shape_string(target.shape()));
        }
        if (!source.same(target)) {
            const auto src = source.data();
            std::copy(src.begin(), src.end(), target.data().begin());
        }
    }

    if (r.u8() != 0) {
        NadamState<Real> opt;
        opt.step = r.u64();
        opt.config.beta1 = r.f64();
        opt.config.beta2 = r.f64();
        opt.config.epsilon = r.f64();
        const auto slots = r.u32();
        const auto width = r.u8();
        if (width != 4 && width != 8) {
            throw IntegrityError("optimizer state has invalid element width");
        }
        for (std::uint32_t k = 0; k < slots; ++k) {
            const auto n = r.u64();
            if (n > (std::uint64_t { 1 } << 40U)) {
                throw IntegrityError("optimizer slot too large");
            }
            std::vector<Real> mv;
            std::vector<Real> vv;
            for (std::uint64_t i = 0; i < n; ++i) {
                mv.push_back(r.real<Real>(width));
            }
            for (std::uint64_t i = 0; i < n; ++i) {
                vv.push_back(r.real<Real>(width));
            }
            opt.m.push_back(std::move(mv));
            opt.v.push_back(std::move(vv));
        }
        ck.optimizer = std::move(opt);
    }
    ck.best.epoch = r.i64();
    ck.best.validation_loss = r.f64();
    if (!r.done()) {
        throw IntegrityError("checkpoint has trailing payload bytes");
    }
    return ck;
}

auto read_file_bytes(const std::string& path) -> std::vector<std::uint8_t>
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

template <typename Real>
void save_checkpoint(const std::string& path,
                     const NerModel<Real>& model,
                     const NadamState<Real>* optimizer,
                     const BestRecord& best)
{
    write_file_bytes(path, encode_checkpoint(model, optimizer, best));
}

template <typename Real>
auto load_checkpoint(const std::string& path) -> Checkpoint<Real>
{
    return decode_checkpoint<Real>(read_file_bytes(path));
}

#define NER_INSTANTIATE_CHECKPOINT(Real)                                       \
    template auto encode_checkpoint(const NerModel<Real>&,                     \
                                    const NadamState<Real>*,                   \
                                    const BestRecord&)                         \
      -> std::vector<std::uint8_t>;                                            \
    template auto decode_checkpoint<Real>(const std::vector<std::uint8_t>&)    \
      -> Checkpoint<Real>;                                                     \
    template void save_checkpoint(const std::string&,                          \
                                  const NerModel<Real>&,                       \
                                  const NadamState<Real>*,                     \
                                  const BestRecord&);                          \
    template auto load_checkpoint<Real>(const std::string&) -> Checkpoint<Real>;

NER_INSTANTIATE_CHECKPOINT(float)
NER_INSTANTIATE_CHECKPOINT(double)

#undef NER_INSTANTIATE_CHECKPOINT

} // namespace ner

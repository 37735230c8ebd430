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

#include "ner/tensor.hpp"

#include "ner/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ner {

auto shape_string(const Shape& shape) -> std::string
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += "x";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

auto shape_size(const Shape& shape) -> std::size_t
{
    return std::accumulate(
      shape.begin(), shape.end(), std::size_t { 1 }, std::multiplies<> {});
}

namespace {

template <typename Real>
void ensure_finite(std::span<const Real> values, const char* op)
{
    for (const Real v : values) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op) + ": non-finite result");
        }
    }
}

template <typename Real>
void require_defined(const Tensor<Real>& t, const char* op)
{
    if (!t.defined()) {
        throw DimensionError(std::string(op) + ": undefined tensor operand");
    }
}

template <typename Real>
void require_same_shape(const Tensor<Real>& a,
                        const Tensor<Real>& b,
                        const char* op)
{
    require_defined(a, op);
    require_defined(b, op);
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes "
                             + shape_string(a.shape()) + " and "
                             + shape_string(b.shape()) + " do not agree");
    }
}

} // namespace

// Tensor

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> data, bool requires_grad)
  : s_ { std::make_shared<Storage>() }
{
    if (shape.empty()) {
        throw DimensionError("tensor shape must have at least one extent");
    }
    for (const auto extent : shape) {
        if (extent == 0) {
            throw DimensionError("tensor extents must be positive, got "
                                 + shape_string(shape));
        }
    }
    if (shape_size(shape) != data.size()) {
        throw DimensionError("tensor of shape " + shape_string(shape)
                             + " cannot hold " + std::to_string(data.size())
                             + " values");
    }
    s_->shape = std::move(shape);
    s_->data = std::move(data);
    s_->requires_grad = requires_grad;
}

template <typename Real>
auto Tensor<Real>::zeros(Shape shape, bool requires_grad) -> Tensor
{
    const auto n = shape_size(shape);
    return { std::move(shape), std::vector<Real>(n, Real { 0 }), requires_grad };
}

template <typename Real>
auto Tensor<Real>::scalar(Real value, bool requires_grad) -> Tensor
{
    return { Shape { 1 }, std::vector<Real> { value }, requires_grad };
}

template <typename Real>
auto Tensor<Real>::vector(std::vector<Real> values, bool requires_grad)
  -> Tensor
{
    const auto n = values.size();
    return { Shape { n }, std::move(values), requires_grad };
}

template <typename Real>
auto Tensor<Real>::shape() const -> const Shape&
{
    return s_->shape;
}

template <typename Real>
auto Tensor<Real>::size() const -> std::size_t
{
    return s_->data.size();
}

template <typename Real>
auto Tensor<Real>::data() const -> std::span<const Real>
{
    return s_->data;
}

template <typename Real>
auto Tensor<Real>::data() -> std::span<Real>
{
    return s_->data;
}

template <typename Real>
auto Tensor<Real>::item() const -> Real
{
    if (size() != 1) {
        throw DimensionError("item() on tensor of shape "
                             + shape_string(shape()));
    }
    return s_->data[0];
}

template <typename Real>
auto Tensor<Real>::requires_grad() const -> bool
{
    return s_ && s_->requires_grad;
}

template <typename Real>
void Tensor<Real>::set_requires_grad(bool flag)
{
    s_->requires_grad = flag;
}

template <typename Real>
auto Tensor<Real>::has_grad() const -> bool
{
    return !s_->grad.empty();
}

template <typename Real>
auto Tensor<Real>::grad() const -> std::span<const Real>
{
    return s_->grad;
}

template <typename Real>
auto Tensor<Real>::grad_buffer() const -> std::span<Real>
{
    if (s_->grad.empty()) {
        s_->grad.assign(s_->data.size(), Real { 0 });
    }
    return s_->grad;
}

template <typename Real>
void Tensor<Real>::zero_grad()
{
    std::fill(s_->grad.begin(), s_->grad.end(), Real { 0 });
}

template <typename Real>
auto Tensor<Real>::clone() const -> Tensor
{
    Tensor copy { s_->shape, s_->data, s_->requires_grad };
    copy.s_->grad = s_->grad;
    return copy;
}

// Tape

template <typename Real>
auto Tape<Real>::tracks(std::initializer_list<const Tensor<Real>*> inputs) const
  -> bool
{
    if (!recording()) {
        return false;
    }
    return std::any_of(inputs.begin(), inputs.end(), [](const auto* t) {
        return t->requires_grad();
    });
}

template <typename Real>
void Tape<Real>::record(Tensor<Real> output, std::function<void()> backward_rule)
{
    if (consumed_) {
        throw TapeError("cannot record on a tape after backward");
    }
    output.set_requires_grad(true);
    entries_.push_back(Entry { std::move(output), std::move(backward_rule) });
}

template <typename Real>
void Tape<Real>::backward(Tensor<Real> loss)
{
    if (!recording()) {
        throw TapeError("backward on an inference tape");
    }
    if (consumed_) {
        throw TapeError("backward already ran on this tape");
    }
    require_defined(loss, "backward");
    if (loss.size() != 1) {
        throw TapeError("backward needs a scalar loss, got shape "
                        + shape_string(loss.shape()));
    }
    consumed_ = true;
    if (!loss.requires_grad()) {
        return;
    }
    loss.grad_buffer()[0] += Real { 1 };
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->output.has_grad()) {
            it->rule();
        }
    }
}

// Operations

template <typename Real>
auto matmul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b)
  -> Tensor<Real>
{
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    const bool vector_rhs = b.rank() == 1;
    if (a.rank() != 2 || (b.rank() != 2 && !vector_rhs)
        || a.shape()[1] != b.shape()[0]) {
        throw DimensionError("matmul: shapes " + shape_string(a.shape())
                             + " and " + shape_string(b.shape())
                             + " do not agree");
    }
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t n = vector_rhs ? 1 : b.shape()[1];

    std::vector<Real> out(m * n, Real { 0 });
    const auto ad = a.data();
    const auto bd = b.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Real acc { 0 };
            for (std::size_t p = 0; p < k; ++p) {
                acc += ad[i * k + p] * bd[p * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    ensure_finite<Real>(out, "matmul");
    Tensor<Real> result { vector_rhs ? Shape { m } : Shape { m, n },
                          std::move(out) };
    if (tape.tracks({ &a, &b })) {
        tape.record(result, [a, b, result, m, k, n]() mutable {
            const auto g = result.grad();
            if (a.requires_grad()) {
                auto ga = a.grad_buffer();
                const auto bd = b.data();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        Real acc { 0 };
                        for (std::size_t j = 0; j < n; ++j) {
                            acc += g[i * n + j] * bd[p * n + j];
                        }
                        ga[i * k + p] += acc;
                    }
                }
            }
            if (b.requires_grad()) {
                auto gb = b.grad_buffer();
                const auto ad = a.data();
                for (std::size_t p = 0; p < k; ++p) {
                    for (std::size_t j = 0; j < n; ++j) {
                        Real acc { 0 };
                        for (std::size_t i = 0; i < m; ++i) {
                            acc += ad[i * k + p] * g[i * n + j];
                        }
                        gb[p * n + j] += acc;
                    }
                }
            }
        });
    }
    return result;
}

template <typename Real>
auto add(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b)
  -> Tensor<Real>
{
    require_same_shape(a, b, "add");
    std::vector<Real> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.at(i) + b.at(i);
    }
    ensure_finite<Real>(out, "add");
    Tensor<Real> result { a.shape(), std::move(out) };
    if (tape.tracks({ &a, &b })) {
        tape.record(result, [a, b, result]() mutable {
            const auto g = result.grad();
            for (auto* t : { &a, &b }) {
                if (t->requires_grad()) {
                    auto gt = t->grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        gt[i] += g[i];
                    }
                }
            }
        });
    }
    return result;
}

template <typename Real>
auto sub(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b)
  -> Tensor<Real>
{
    require_same_shape(a, b, "sub");
    std::vector<Real> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.at(i) - b.at(i);
    }
    ensure_finite<Real>(out, "sub");
    Tensor<Real> result { a.shape(), std::move(out) };
    if (tape.tracks({ &a, &b })) {
        tape.record(result, [a, b, result]() mutable {
            const auto g = result.grad();
            if (a.requires_grad()) {
                auto ga = a.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i];
                }
            }
            if (b.requires_grad()) {
                auto gb = b.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gb[i] -= g[i];
                }
            }
        });
    }
    return result;
}

template <typename Real>
auto mul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b)
  -> Tensor<Real>
{
    require_same_shape(a, b, "mul");
    std::vector<Real> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.at(i) * b.at(i);
    }
    ensure_finite<Real>(out, "mul");
    Tensor<Real> result { a.shape(), std::move(out) };
    if (tape.tracks({ &a, &b })) {
        tape.record(result, [a, b, result]() mutable {
            const auto g = result.grad();
            if (a.requires_grad()) {
                auto ga = a.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i] * b.at(i);
                }
            }
            if (b.requires_grad()) {
                auto gb = b.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gb[i] += g[i] * a.at(i);
                }
            }
        });
    }
    return result;
}

template <typename Real>
auto scale(Tape<Real>& tape, const Tensor<Real>& x, Real factor) -> Tensor<Real>
{
    require_defined(x, "scale");
    std::vector<Real> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x.at(i) * factor;
    }
    ensure_finite<Real>(out, "scale");
    Tensor<Real> result { x.shape(), std::move(out) };
    if (tape.tracks({ &x })) {
        tape.record(result, [x, result, factor]() mutable {
            const auto g = result.grad();
            auto gx = x.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i] * factor;
            }
        });
    }
    return result;
}

template <typename Real>
auto sigmoid(Tape<Real>& tape, const Tensor<Real>& x) -> Tensor<Real>
{
    require_defined(x, "sigmoid");
    std::vector<Real> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Real v = x.at(i);
        if (v >= Real { 0 }) {
            out[i] = Real { 1 } / (Real { 1 } + std::exp(-v));
        } else {
            const Real e = std::exp(v);
            out[i] = e / (Real { 1 } + e);
        }
    }
    ensure_finite<Real>(out, "sigmoid");
    Tensor<Real> result { x.shape(), std::move(out) };
    if (tape.tracks({ &x })) {
        tape.record(result, [x, result]() mutable {
            const auto g = result.grad();
            const auto y = result.data();
            auto gx = x.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i] * y[i] * (Real { 1 } - y[i]);
            }
        });
    }
    return result;
}

template <typename Real>
auto tanh(Tape<Real>& tape, const Tensor<Real>& x) -> Tensor<Real>
{
    require_defined(x, "tanh");
    std::vector<Real> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::tanh(x.at(i));
    }
    ensure_finite<Real>(out, "tanh");
    Tensor<Real> result { x.shape(), std::move(out) };
    if (tape.tracks({ &x })) {
        tape.record(result, [x, result]() mutable {
            const auto g = result.grad();
            const auto y = result.data();
            auto gx = x.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i] * (Real { 1 } - y[i] * y[i]);
            }
        });
    }
    return result;
}

template <typename Real>
auto concat(Tape<Real>& tape, std::span<const Tensor<Real>> parts)
  -> Tensor<Real>
{
    if (parts.empty()) {
        throw DimensionError("concat: no operands");
    }
    for (const auto& p : parts) {
        require_defined(p, "concat");
    }
    const Shape& first = parts.front().shape();
    const std::size_t lead_rank = first.size() - 1;
    std::size_t outer = 1;
    for (std::size_t d = 0; d < lead_rank; ++d) {
        outer *= first[d];
    }
    std::size_t inner_total = 0;
    std::vector<std::size_t> inner;
    inner.reserve(parts.size());
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != first.size()
            || !std::equal(s.begin(), s.end() - 1, first.begin())) {
            throw DimensionError("concat: shapes " + shape_string(first)
                                 + " and " + shape_string(s)
                                 + " differ outside the last axis");
        }
        inner.push_back(s.back());
        inner_total += s.back();
    }

    std::vector<Real> out;
    out.reserve(outer * inner_total);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t k = 0; k < parts.size(); ++k) {
            const auto d = parts[k].data();
            out.insert(out.end(),
                       d.begin() + static_cast<std::ptrdiff_t>(o * inner[k]),
                       d.begin()
                         + static_cast<std::ptrdiff_t>((o + 1) * inner[k]));
        }
    }
    Shape shape = first;
    shape.back() = inner_total;
    Tensor<Real> result { std::move(shape), std::move(out) };

    bool any = false;
    for (const auto& p : parts) {
        any = any || p.requires_grad();
    }
    if (tape.recording() && any) {
        std::vector<Tensor<Real>> inputs(parts.begin(), parts.end());
        tape.record(result,
                    [inputs = std::move(inputs),
                     inner = std::move(inner),
                     result,
                     outer,
                     inner_total]() mutable {
                        const auto g = result.grad();
                        std::size_t offset = 0;
                        for (std::size_t k = 0; k < inputs.size(); ++k) {
                            if (inputs[k].requires_grad()) {
                                auto gk = inputs[k].grad_buffer();
                                for (std::size_t o = 0; o < outer; ++o) {
                                    for (std::size_t j = 0; j < inner[k]; ++j) {
                                        gk[o * inner[k] + j] +=
                                          g[o * inner_total + offset + j];
                                    }
                                }
                            }
                            offset += inner[k];
                        }
                    });
    }
    return result;
}

template <typename Real>
auto stack(Tape<Real>& tape, std::span<const Tensor<Real>> rows)
  -> Tensor<Real>
{
    if (rows.empty()) {
        throw DimensionError("stack: no rows");
    }
    const std::size_t width = rows.front().size();
    std::vector<Real> out;
    out.reserve(rows.size() * width);
    bool any = false;
    for (const auto& r : rows) {
        require_defined(r, "stack");
        if (r.rank() != 1 || r.size() != width) {
            throw DimensionError("stack: row shape " + shape_string(r.shape())
                                 + " differs from ["
                                 + std::to_string(width) + "]");
        }
        const auto d = r.data();
        out.insert(out.end(), d.begin(), d.end());
        any = any || r.requires_grad();
    }
    Tensor<Real> result { Shape { rows.size(), width }, std::move(out) };
    if (tape.recording() && any) {
        std::vector<Tensor<Real>> inputs(rows.begin(), rows.end());
        tape.record(result,
                    [inputs = std::move(inputs), result, width]() mutable {
                        const auto g = result.grad();
                        for (std::size_t r = 0; r < inputs.size(); ++r) {
                            if (inputs[r].requires_grad()) {
                                auto gr = inputs[r].grad_buffer();
                                for (std::size_t j = 0; j < width; ++j) {
                                    gr[j] += g[r * width + j];
                                }
                            }
                        }
                    });
    }
    return result;
}

template <typename Real>
auto row(Tape<Real>& tape, const Tensor<Real>& matrix, std::size_t index)
  -> Tensor<Real>
{
    require_defined(matrix, "row");
    if (matrix.rank() != 2 || index >= matrix.shape()[0]) {
        throw DimensionError("row: index " + std::to_string(index)
                             + " outside matrix of shape "
                             + shape_string(matrix.shape()));
    }
    const std::size_t width = matrix.shape()[1];
    const auto d = matrix.data();
    std::vector<Real> out(d.begin() + static_cast<std::ptrdiff_t>(index * width),
                          d.begin()
                            + static_cast<std::ptrdiff_t>((index + 1) * width));
    Tensor<Real> result { Shape { width }, std::move(out) };
    if (tape.tracks({ &matrix })) {
        tape.record(result, [matrix, result, index, width]() mutable {
            const auto g = result.grad();
            auto gm = matrix.grad_buffer();
            for (std::size_t j = 0; j < width; ++j) {
                gm[index * width + j] += g[j];
            }
        });
    }
    return result;
}

template <typename Real>
auto sum(Tape<Real>& tape, const Tensor<Real>& x) -> Tensor<Real>
{
    require_defined(x, "sum");
    Real acc { 0 };
    for (const Real v : x.data()) {
        acc += v;
    }
    if (!std::isfinite(acc)) {
        throw NumericError("sum: non-finite result");
    }
    auto result = Tensor<Real>::scalar(acc);
    if (tape.tracks({ &x })) {
        tape.record(result, [x, result]() mutable {
            const Real g = result.grad()[0];
            auto gx = x.grad_buffer();
            for (auto& v : gx) {
                v += g;
            }
        });
    }
    return result;
}

template <typename Real>
auto dropout(Tape<Real>& tape,
             const Tensor<Real>& x,
             double rate,
             bool training,
             Rng& rng) -> Tensor<Real>
{
    require_defined(x, "dropout");
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ParameterError("dropout rate must lie in [0, 1), got "
                             + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        return x;
    }
    const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
    std::vector<Real> mask(x.size());
    std::vector<Real> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        mask[i] = rng.uniform() < rate ? Real { 0 } : keep_scale;
        out[i] = x.at(i) * mask[i];
    }
    ensure_finite<Real>(out, "dropout");
    Tensor<Real> result { x.shape(), std::move(out) };
    if (tape.tracks({ &x })) {
        tape.record(result, [x, result, mask = std::move(mask)]() mutable {
            const auto g = result.grad();
            auto gx = x.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i] * mask[i];
            }
        });
    }
    return result;
}

#define NER_INSTANTIATE_TENSOR(Real)                                           \
    template class Tensor<Real>;                                               \
    template class Tape<Real>;                                                 \
    template auto matmul(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&) \
      -> Tensor<Real>;                                                         \
    template auto add(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&)    \
      -> Tensor<Real>;                                                         \
    template auto sub(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&)    \
      -> Tensor<Real>;                                                         \
    template auto mul(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&)    \
      -> Tensor<Real>;                                                         \
    template auto scale(Tape<Real>&, const Tensor<Real>&, Real)               \
      -> Tensor<Real>;                                                         \
    template auto sigmoid(Tape<Real>&, const Tensor<Real>&) -> Tensor<Real>;   \
    template auto tanh(Tape<Real>&, const Tensor<Real>&) -> Tensor<Real>;      \
    template auto concat(Tape<Real>&, std::span<const Tensor<Real>>)           \
      -> Tensor<Real>;                                                         \
    template auto stack(Tape<Real>&, std::span<const Tensor<Real>>)            \
      -> Tensor<Real>;                                                         \
    template auto row(Tape<Real>&, const Tensor<Real>&, std::size_t)           \
      -> Tensor<Real>;                                                         \
    template auto sum(Tape<Real>&, const Tensor<Real>&) -> Tensor<Real>;       \
    template auto dropout(                                                     \
      Tape<Real>&, const Tensor<Real>&, double, bool, Rng&) -> Tensor<Real>;

NER_INSTANTIATE_TENSOR(float)
NER_INSTANTIATE_TENSOR(double)

#undef NER_INSTANTIATE_TENSOR

} // namespace ner

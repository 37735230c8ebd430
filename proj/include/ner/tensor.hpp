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

// Dense tensors with reverse-mode differentiation.
//
// A Tensor is a shared handle to a buffer: copying the handle aliases
// the data, which is what lets a parameter appear in many recorded
// operations and collect all of their gradient contributions. Use
// clone() for a deep copy.
//
// Operations take the Tape they should be recorded on. An operation is
// recorded only when the tape is recording and at least one operand
// requires a gradient; otherwise it is a plain forward computation.

#pragma once

#include "ner/rng.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ner {

using Shape = std::vector<std::size_t>;

auto shape_string(const Shape& shape) -> std::string;
auto shape_size(const Shape& shape) -> std::size_t;

template <typename Real>
class Tensor
{
public:
    /// Null handle; most operations reject it.
    Tensor() = default;

    Tensor(Shape shape, std::vector<Real> data, bool requires_grad = false);

    static auto zeros(Shape shape, bool requires_grad = false) -> Tensor;
    static auto scalar(Real value, bool requires_grad = false) -> Tensor;
    static auto vector(std::vector<Real> values, bool requires_grad = false)
      -> Tensor;

    [[nodiscard]] auto defined() const noexcept -> bool { return bool(s_); }
    [[nodiscard]] auto shape() const -> const Shape&;
    [[nodiscard]] auto rank() const -> std::size_t { return shape().size(); }
    [[nodiscard]] auto size() const -> std::size_t;
    [[nodiscard]] auto is_scalar() const -> bool { return size() == 1; }

    [[nodiscard]] auto data() const -> std::span<const Real>;
    [[nodiscard]] auto data() -> std::span<Real>;
    [[nodiscard]] auto item() const -> Real;
    [[nodiscard]] auto at(std::size_t i) const -> Real { return data()[i]; }
    [[nodiscard]] auto values() const -> std::vector<Real>
    {
        auto d = data();
        return { d.begin(), d.end() };
    }

    [[nodiscard]] auto requires_grad() const -> bool;
    void set_requires_grad(bool flag);

    [[nodiscard]] auto has_grad() const -> bool;
    /// Gradient buffer; empty span if no gradient has been accumulated.
    [[nodiscard]] auto grad() const -> std::span<const Real>;
    /// Gradient buffer, allocated (zero-filled) on first use. Const like
    /// every handle operation: the storage is shared, not owned.
    auto grad_buffer() const -> std::span<Real>;
    void zero_grad();

    [[nodiscard]] auto clone() const -> Tensor;
    [[nodiscard]] auto same(const Tensor& other) const noexcept -> bool
    {
        return s_ == other.s_;
    }

private:
    struct Storage
    {
        Shape shape;
        std::vector<Real> data;
        std::vector<Real> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> s_;
};

template <typename Real>
class Tape
{
public:
    enum class Mode
    {
        record,
        inference
    };

    explicit Tape(Mode mode = Mode::record) : mode_ { mode } {}
    Tape(const Tape&) = delete;
    auto operator=(const Tape&) -> Tape& = delete;
    Tape(Tape&&) noexcept = default;
    auto operator=(Tape&&) noexcept -> Tape& = default;
    ~Tape() = default;

    [[nodiscard]] auto recording() const noexcept -> bool
    {
        return mode_ == Mode::record;
    }
    [[nodiscard]] auto size() const noexcept -> std::size_t
    {
        return entries_.size();
    }

    /// True if an operation over these operands has to be recorded.
    [[nodiscard]] auto tracks(std::initializer_list<const Tensor<Real>*> inputs)
      const -> bool;

    /// Appends an operation. The rule reads the output gradient and adds
    /// its contribution to the gradients of the operands.
    void record(Tensor<Real> output, std::function<void()> backward_rule);

    /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
    void backward(Tensor<Real> loss);

private:
    struct Entry
    {
        Tensor<Real> output;
        std::function<void()> rule;
    };
    Mode mode_;
    bool consumed_ = false;
    std::vector<Entry> entries_;
};

template <typename Real>
void backward(Tape<Real>& tape, const Tensor<Real>& loss)
{
    tape.backward(loss);
}

// Matrix product [m x k] * [k x n] -> [m x n]. A rank-1 right operand of
// length k is treated as a column and yields a rank-1 result of length m.
template <typename Real>
auto matmul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b)
  -> Tensor<Real>;

template <typename Real>
auto add(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b)
  -> Tensor<Real>;

template <typename Real>
auto sub(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b)
  -> Tensor<Real>;

template <typename Real>
auto mul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b)
  -> Tensor<Real>;

template <typename Real>
auto scale(Tape<Real>& tape, const Tensor<Real>& x, Real factor) -> Tensor<Real>;

template <typename Real>
auto sigmoid(Tape<Real>& tape, const Tensor<Real>& x) -> Tensor<Real>;

template <typename Real>
auto tanh(Tape<Real>& tape, const Tensor<Real>& x) -> Tensor<Real>;

/// Concatenation along the last axis.
template <typename Real>
auto concat(Tape<Real>& tape, std::span<const Tensor<Real>> parts)
  -> Tensor<Real>;

template <typename Real>
auto concat(Tape<Real>& tape, std::initializer_list<Tensor<Real>> parts)
  -> Tensor<Real>
{
    return concat(tape, std::span<const Tensor<Real>>(parts.begin(), parts.size()));
}

/// Stacks equal-length vectors into the rows of a matrix.
template <typename Real>
auto stack(Tape<Real>& tape, std::span<const Tensor<Real>> rows)
  -> Tensor<Real>;

/// Row `index` of a matrix, as a vector.
template <typename Real>
auto row(Tape<Real>& tape, const Tensor<Real>& matrix, std::size_t index)
  -> Tensor<Real>;

template <typename Real>
auto sum(Tape<Real>& tape, const Tensor<Real>& x) -> Tensor<Real>;

/// Inverted dropout: in training mode each element is zeroed with
/// probability `rate` and survivors are scaled by 1/(1-rate); in
/// inference mode (or at rate 0) the input handle is returned.
template <typename Real>
auto dropout(Tape<Real>& tape,
             const Tensor<Real>& x,
             double rate,
             bool training,
             Rng& rng) -> Tensor<Real>;

} // namespace ner

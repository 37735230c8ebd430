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

// Linear-chain CRF over K tags.
//
// The score of a tag sequence y for emissions e [n x K] is
//
//     sum_i e[i, y_i] + T[BOS, y_1] + sum_{i>1} T[y_{i-1}, y_i] + T[y_n, EOS]
//
// where T is the (K+2) x (K+2) transition table indexed [from, to] and
// BOS = K, EOS = K+1 are virtual tags that are never emitted. Entries
// into BOS and out of EOS are -inf and never read.

#pragma once

#include "ner/recurrent.hpp"
#include "ner/rng.hpp"
#include "ner/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ner {

template <typename Real>
struct CrfParams
{
    Tensor<Real> emission_weight; // [K x input]
    Tensor<Real> emission_bias;   // [K]
    Tensor<Real> transition;      // [(K+2) x (K+2)]

    /// Glorot-uniform emission weights, zero bias, zero transitions.
    static auto init(std::size_t input, std::size_t tags, Rng& rng) -> CrfParams;
    static auto zeros(std::size_t input, std::size_t tags) -> CrfParams;
    /// Zero emission projection with the given K x K tag-to-tag block;
    /// BOS/EOS entries zero.
    static auto from_transitions(std::size_t input,
                                 std::size_t tags,
                                 std::span<const Real> tag_block) -> CrfParams;

    [[nodiscard]] auto tag_count() const -> std::size_t
    {
        return emission_bias.size();
    }
    [[nodiscard]] auto bos() const -> std::size_t { return tag_count(); }
    [[nodiscard]] auto eos() const -> std::size_t { return tag_count() + 1; }
    /// Transition score from tag (or BOS) `from` to tag (or EOS) `to`.
    [[nodiscard]] auto trans(std::size_t from, std::size_t to) const -> Real
    {
        return transition.at(from * (tag_count() + 2) + to);
    }

    [[nodiscard]] auto named(const std::string& prefix) const
      -> NamedTensors<Real>;
};

/// Per-position tag scores W h_t + b, stacked into [n x K].
template <typename Real>
auto emissions(Tape<Real>& tape,
               const CrfParams<Real>& p,
               std::span<const Tensor<Real>> encoded) -> Tensor<Real>;

template <typename Real>
auto score_sequence(const Tensor<Real>& emissions,
                    std::span<const std::size_t> tags,
                    const CrfParams<Real>& p) -> Real;

/// log of the sum of exp(score) over all K^n sequences (forward
/// algorithm, log-sum-exp recurrences).
template <typename Real>
auto log_partition(const Tensor<Real>& emissions, const CrfParams<Real>& p)
  -> Real;

/// Posterior tag marginals P(y_i = k | x), row-major [n x K].
template <typename Real>
auto tag_marginals(const Tensor<Real>& emissions, const CrfParams<Real>& p)
  -> std::vector<Real>;

/// log_partition - score_sequence(gold). Differentiable in the
/// emissions and the transition table; the emission gradient is the
/// marginals minus the gold one-hot.
template <typename Real>
auto nll_loss(Tape<Real>& tape,
              const Tensor<Real>& emissions,
              std::span<const std::size_t> gold,
              const CrfParams<Real>& p) -> Tensor<Real>;

template <typename Real>
struct Decoded
{
    std::vector<std::size_t> tags;
    /// score_sequence of `tags`.
    Real score;
};

/// Highest-scoring sequence. Ties go to the lowest tag index, both for
/// the final tag and at every backtracking step.
template <typename Real>
auto viterbi_decode(const Tensor<Real>& emissions, const CrfParams<Real>& p)
  -> Decoded<Real>;

} // namespace ner

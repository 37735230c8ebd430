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

#include "ner/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ner {

struct NadamConfig
{
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    friend auto operator==(const NadamConfig&, const NadamConfig&) -> bool = default;
};

/// First and second moments per parameter plus the step counter.
template <typename Real>
struct NadamState
{
    NadamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<Real>> m;
    std::vector<std::vector<Real>> v;

    /// Zero moments shaped like `params`.
    static auto for_params(std::span<const Tensor<Real>> params,
                           NadamConfig config = {}) -> NadamState;

    friend auto operator==(const NadamState&, const NadamState&) -> bool = default;
};

/// One Nadam update, with t the step count after incrementing:
///
///     m <- b1 m + (1 - b1) g
///     v <- b2 v + (1 - b2) g^2
///     m_hat = m / (1 - b1^(t+1)),  v_hat = v / (1 - b2^t)
///     theta <- theta - lr (b1 m_hat + (1 - b1) g / (1 - b1^t))
///                         / (sqrt(v_hat) + eps)
///
/// Nothing is modified if any gradient is non-finite (NumericError) or
/// shapes disagree (DimensionError). lr = 0 leaves parameters fixed.
template <typename Real>
void nadam_step(std::span<Tensor<Real>> params,
                std::span<const std::vector<Real>> grads,
                NadamState<Real>& state,
                double lr);

/// Same, taking each parameter's accumulated gradient (zero if none).
template <typename Real>
void nadam_step(std::span<Tensor<Real>> params, NadamState<Real>& state, double lr);

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename Real>
auto clip_grad_norm(std::span<Tensor<Real>> params, double max_norm) -> double;

template <typename Real>
void zero_grad(std::span<Tensor<Real>> params)
{
    for (auto& p : params) {
        p.zero_grad();
    }
}

struct LrSchedule
{
    double phase1_lr = 0.004;
    double phase2_lr = 0.0004;
    std::size_t phase1_epochs = 20;
};

/// Learning rate for a 0-based epoch.
auto lr_schedule(long long epoch, const LrSchedule& schedule = {}) -> double;

} // namespace ner

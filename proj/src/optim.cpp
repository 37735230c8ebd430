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

#include "ner/optim.hpp"

#include "ner/errors.hpp"

#include <cmath>
#include <string>

namespace ner {

template <typename Real>
auto NadamState<Real>::for_params(std::span<const Tensor<Real>> params,
                                  NadamConfig config) -> NadamState
{
    NadamState state;
    state.config = config;
    for (const auto& p : params) {
        state.m.emplace_back(p.size(), Real { 0 });
        state.v.emplace_back(p.size(), Real { 0 });
    }
    return state;
}

template <typename Real>
void nadam_step(std::span<Tensor<Real>> params,
                std::span<const std::vector<Real>> grads,
                NadamState<Real>& state,
                double lr)
{
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
        throw ParameterError("learning rate must be finite and non-negative");
    }
    if (grads.size() != params.size() || state.m.size() != params.size()
        || state.v.size() != params.size()) {
        throw DimensionError("nadam_step: " + std::to_string(params.size())
                             + " parameters, " + std::to_string(grads.size())
                             + " gradients, " + std::to_string(state.m.size())
                             + " moment slots");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto n = params[k].size();
        if (grads[k].size() != n || state.m[k].size() != n
            || state.v[k].size() != n) {
            throw DimensionError("nadam_step: gradient " + std::to_string(k)
                                 + " does not match parameter shape "
                                 + shape_string(params[k].shape()));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(grads[k][i])) {
                throw NumericError("nadam_step: non-finite gradient in parameter "
                                   + std::to_string(k) + " at element "
                                   + std::to_string(i));
            }
        }
    }

    state.step += 1;
    const double b1 = state.config.beta1;
    const double b2 = state.config.beta2;
    const double eps = state.config.epsilon;
    const auto t = static_cast<double>(state.step);
    const double m_corr = 1.0 - std::pow(b1, t + 1.0);
    const double g_corr = 1.0 - std::pow(b1, t);
    const double v_corr = 1.0 - std::pow(b2, t);

    for (std::size_t k = 0; k < params.size(); ++k) {
        auto theta = params[k].data();
        auto& m = state.m[k];
        auto& v = state.v[k];
        const auto& g = grads[k];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = g[i];
            const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * gi;
            const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * gi * gi;
            m[i] = static_cast<Real>(mi);
            v[i] = static_cast<Real>(vi);
            const double m_hat = mi / m_corr;
            const double v_hat = vi / v_corr;
            const double update =
              lr * (b1 * m_hat + (1.0 - b1) * gi / g_corr) / (std::sqrt(v_hat) + eps);
            theta[i] = static_cast<Real>(static_cast<double>(theta[i]) - update);
        }
    }
}

template <typename Real>
void nadam_step(std::span<Tensor<Real>> params, NadamState<Real>& state, double lr)
{
    std::vector<std::vector<Real>> grads;
    grads.reserve(params.size());
    for (const auto& p : params) {
        if (p.has_grad()) {
            const auto g = p.grad();
            grads.emplace_back(g.begin(), g.end());
        } else {
            grads.emplace_back(p.size(), Real { 0 });
        }
    }
    nadam_step<Real>(params, grads, state, lr);
}

template <typename Real>
auto clip_grad_norm(std::span<Tensor<Real>> params, double max_norm) -> double
{
    double sq = 0.0;
    for (const auto& p : params) {
        for (const Real g : p.grad()) {
            sq += static_cast<double>(g) * static_cast<double>(g);
        }
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const auto factor = static_cast<Real>(max_norm / norm);
        for (auto& p : params) {
            if (p.has_grad()) {
                for (auto& g : p.grad_buffer()) {
                    g *= factor;
                }
            }
        }
    }
    return norm;
}

auto lr_schedule(long long epoch, const LrSchedule& schedule) -> double
{
    if (epoch < 0) {
        throw ParameterError("epoch must be non-negative, got "
                             + std::to_string(epoch));
    }
    return static_cast<std::size_t>(epoch) < schedule.phase1_epochs
             ? schedule.phase1_lr
             : schedule.phase2_lr;
}

#define NER_INSTANTIATE_OPTIM(Real)                                            \
    template struct NadamState<Real>;                                          \
    template void nadam_step(std::span<Tensor<Real>>,                          \
                             std::span<const std::vector<Real>>,               \
                             NadamState<Real>&,                                \
                             double);                                          \
    template void nadam_step(std::span<Tensor<Real>>, NadamState<Real>&, double); \
    template auto clip_grad_norm(std::span<Tensor<Real>>, double) -> double;

NER_INSTANTIATE_OPTIM(float)
NER_INSTANTIATE_OPTIM(double)

#undef NER_INSTANTIATE_OPTIM

} // namespace ner

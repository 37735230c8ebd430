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

#include "ner/crf.hpp"

#include "ner/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ner {

namespace {

template <typename Real>
auto neg_inf() -> Real
{
    return -std::numeric_limits<Real>::infinity();
}

template <typename Real>
void close_virtual_tags(std::vector<Real>& table, std::size_t k)
{
    const std::size_t w = k + 2;
    for (std::size_t from = 0; from < w; ++from) {
        table[from * w + k] = neg_inf<Real>(); // into BOS
    }
    for (std::size_t to = 0; to < w; ++to) {
        table[(k + 1) * w + to] = neg_inf<Real>(); // out of EOS
    }
}

template <typename Real>
auto log_sum_exp(std::span<const Real> xs) -> Real
{
    Real m = neg_inf<Real>();
    for (const Real x : xs) {
        m = std::max(m, x);
    }
    if (!std::isfinite(m)) {
        return m;
    }
    Real acc { 0 };
    for (const Real x : xs) {
        acc += std::exp(x - m);
    }
    return m + std::log(acc);
}

template <typename Real>
auto check_emissions(const Tensor<Real>& e, const CrfParams<Real>& p)
  -> std::size_t
{
    if (!e.defined() || e.rank() != 2) {
        throw DimensionError("CRF emissions must be an [n x K] matrix");
    }
    if (e.shape()[1] != p.tag_count()) {
        throw DimensionError("CRF emissions " + shape_string(e.shape())
                             + " do not match " + std::to_string(p.tag_count())
                             + " tags");
    }
    return e.shape()[0];
}

template <typename Real>
void check_tags(std::span<const std::size_t> tags,
                std::size_t n,
                std::size_t k)
{
    if (tags.size() != n) {
        throw DimensionError("tag sequence of length " + std::to_string(tags.size())
                             + " for " + std::to_string(n) + " positions");
    }
    for (const auto t : tags) {
        if (t >= k) {
            throw ValidationError("tag index " + std::to_string(t)
                                  + " out of range for " + std::to_string(k)
                                  + " tags");
        }
    }
}

// alpha[i][k]: log-sum of scores of all prefixes ending in tag k at i.
template <typename Real>
auto forward_table(const Tensor<Real>& e, const CrfParams<Real>& p)
  -> std::vector<Real>
{
    const std::size_t n = e.shape()[0];
    const std::size_t k = p.tag_count();
    const auto ed = e.data();
    std::vector<Real> alpha(n * k);
    for (std::size_t t = 0; t < k; ++t) {
        alpha[t] = p.trans(p.bos(), t) + ed[t];
    }
    std::vector<Real> terms(k);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
            for (std::size_t a = 0; a < k; ++a) {
                terms[a] = alpha[(i - 1) * k + a] + p.trans(a, t);
            }
            alpha[i * k + t] = ed[i * k + t] + log_sum_exp<Real>(terms);
        }
    }
    return alpha;
}

// beta[i][k]: log-sum of scores of all suffixes after tag k at i,
// including the transition into EOS.
template <typename Real>
auto backward_table(const Tensor<Real>& e, const CrfParams<Real>& p)
  -> std::vector<Real>
{
    const std::size_t n = e.shape()[0];
    const std::size_t k = p.tag_count();
    const auto ed = e.data();
    std::vector<Real> beta(n * k);
    for (std::size_t t = 0; t < k; ++t) {
        beta[(n - 1) * k + t] = p.trans(t, p.eos());
    }
    std::vector<Real> terms(k);
    for (std::size_t i = n - 1; i-- > 0;) {
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
                terms[b] = p.trans(a, b) + ed[(i + 1) * k + b] + beta[(i + 1) * k + b];
            }
            beta[i * k + a] = log_sum_exp<Real>(terms);
        }
    }
    return beta;
}

template <typename Real>
auto final_log_sum(const std::vector<Real>& alpha,
                   const CrfParams<Real>& p,
                   std::size_t n) -> Real
{
    const std::size_t k = p.tag_count();
    std::vector<Real> terms(k);
    for (std::size_t t = 0; t < k; ++t) {
        terms[t] = alpha[(n - 1) * k + t] + p.trans(t, p.eos());
    }
    return log_sum_exp<Real>(terms);
}

} // namespace

template <typename Real>
auto CrfParams<Real>::init(std::size_t input, std::size_t tags, Rng& rng)
  -> CrfParams
{
    auto p = zeros(input, tags);
    const double bound = std::sqrt(6.0 / static_cast<double>(input + tags));
    for (auto& v : p.emission_weight.data()) {
        v = static_cast<Real>(rng.uniform(-bound, bound));
    }
    return p;
}

template <typename Real>
auto CrfParams<Real>::zeros(std::size_t input, std::size_t tags) -> CrfParams
{
    if (input == 0 || tags == 0) {
        throw ParameterError("CRF needs at least one tag and one input feature");
    }
    std::vector<Real> table((tags + 2) * (tags + 2), Real { 0 });
    close_virtual_tags(table, tags);
    return { Tensor<Real>::zeros({ tags, input }, true),
             Tensor<Real>::zeros({ tags }, true),
             Tensor<Real>({ tags + 2, tags + 2 }, std::move(table), true) };
}

template <typename Real>
auto CrfParams<Real>::from_transitions(std::size_t input,
                                       std::size_t tags,
                                       std::span<const Real> tag_block)
  -> CrfParams
{
    if (tag_block.size() != tags * tags) {
        throw DimensionError("transition block must hold K*K values");
    }
    auto p = zeros(input, tags);
    auto d = p.transition.data();
    for (std::size_t a = 0; a < tags; ++a) {
        for (std::size_t b = 0; b < tags; ++b) {
            d[a * (tags + 2) + b] = tag_block[a * tags + b];
        }
    }
    return p;
}

template <typename Real>
auto CrfParams<Real>::named(const std::string& prefix) const -> NamedTensors<Real>
{
    return { { prefix + ".emission_weight", emission_weight },
             { prefix + ".emission_bias", emission_bias },
             { prefix + ".transition", transition } };
}

template <typename Real>
auto emissions(Tape<Real>& tape,
               const CrfParams<Real>& p,
               std::span<const Tensor<Real>> encoded) -> Tensor<Real>
{
    if (encoded.empty()) {
        throw DimensionError("emissions: empty sentence");
    }
    std::vector<Tensor<Real>> rows;
    rows.reserve(encoded.size());
    for (const auto& h : encoded) {
        rows.push_back(
          add(tape, matmul(tape, p.emission_weight, h), p.emission_bias));
    }
    return stack<Real>(tape, rows);
}

template <typename Real>
auto score_sequence(const Tensor<Real>& e,
                    std::span<const std::size_t> tags,
                    const CrfParams<Real>& p) -> Real
{
    const std::size_t n = check_emissions(e, p);
    const std::size_t k = p.tag_count();
    check_tags<Real>(tags, n, k);
    if (n == 0) {
        throw DimensionError("score_sequence: empty emissions");
    }
    Real score { 0 };
    for (std::size_t i = 0; i < n; ++i) {
        score += e.at(i * k + tags[i]);
    }
    score += p.trans(p.bos(), tags[0]);
    for (std::size_t i = 1; i < n; ++i) {
        score += p.trans(tags[i - 1], tags[i]);
    }
    score += p.trans(tags[n - 1], p.eos());
    return score;
}

template <typename Real>
auto log_partition(const Tensor<Real>& e, const CrfParams<Real>& p) -> Real
{
    const std::size_t n = check_emissions(e, p);
    const auto alpha = forward_table(e, p);
    return final_log_sum(alpha, p, n);
}

template <typename Real>
auto tag_marginals(const Tensor<Real>& e, const CrfParams<Real>& p)
  -> std::vector<Real>
{
    const std::size_t n = check_emissions(e, p);
    const std::size_t k = p.tag_count();
    const auto alpha = forward_table(e, p);
    const auto beta = backward_table(e, p);
    const Real log_z = final_log_sum(alpha, p, n);
    std::vector<Real> out(n * k);
    for (std::size_t i = 0; i < n * k; ++i) {
        out[i] = std::exp(alpha[i] + beta[i] - log_z);
    }
    return out;
}

template <typename Real>
auto nll_loss(Tape<Real>& tape,
              const Tensor<Real>& e,
              std::span<const std::size_t> gold,
              const CrfParams<Real>& p) -> Tensor<Real>
{
    const std::size_t n = check_emissions(e, p);
    const std::size_t k = p.tag_count();
    check_tags<Real>(gold, n, k);

    const auto alpha = forward_table(e, p);
    const Real log_z = final_log_sum(alpha, p, n);
    const Real gold_score = score_sequence(e, gold, p);
    const Real value = std::max(Real { 0 }, log_z - gold_score);
    if (!std::isfinite(value)) {
        throw NumericError("nll_loss: non-finite result");
    }
    auto result = Tensor<Real>::scalar(value);

    const Tensor<Real>& trans = p.transition;
    if (!tape.tracks({ &e, &trans })) {
        return result;
    }
    tape.record(
      result,
      [e = Tensor<Real>(e), trans = Tensor<Real>(trans), p, result, alpha, log_z, n, k,
       gold = std::vector<std::size_t>(gold.begin(), gold.end())]() mutable {
          const Real g = result.grad()[0];
          const auto beta = backward_table(e, p);
          const auto ed = e.data();
          if (e.requires_grad()) {
              auto ge = e.grad_buffer();
              for (std::size_t i = 0; i < n; ++i) {
                  for (std::size_t t = 0; t < k; ++t) {
                      const Real marginal =
                        std::exp(alpha[i * k + t] + beta[i * k + t] - log_z);
                      ge[i * k + t] += g * marginal;
                  }
                  ge[i * k + gold[i]] -= g;
              }
          }
          if (trans.requires_grad()) {
              const std::size_t w = k + 2;
              auto gt = trans.grad_buffer();
              for (std::size_t t = 0; t < k; ++t) {
                  gt[p.bos() * w + t] +=
                    g * std::exp(p.trans(p.bos(), t) + ed[t] + beta[t] - log_z);
                  gt[t * w + p.eos()] +=
                    g
                    * std::exp(alpha[(n - 1) * k + t] + p.trans(t, p.eos())
                               - log_z);
              }
              for (std::size_t i = 1; i < n; ++i) {
                  for (std::size_t a = 0; a < k; ++a) {
                      for (std::size_t b = 0; b < k; ++b) {
                          gt[a * w + b] +=
                            g
                            * std::exp(alpha[(i - 1) * k + a] + p.trans(a, b)
                                       + ed[i * k + b] + beta[i * k + b] - log_z);
                      }
                  }
              }
              gt[p.bos() * w + gold[0]] -= g;
              for (std::size_t i = 1; i < n; ++i) {
                  gt[gold[i - 1] * w + gold[i]] -= g;
              }
              gt[gold[n - 1] * w + p.eos()] -= g;
          }
      });
    return result;
}

template <typename Real>
auto viterbi_decode(const Tensor<Real>& e, const CrfParams<Real>& p)
  -> Decoded<Real>
{
    const std::size_t n = check_emissions(e, p);
    const std::size_t k = p.tag_count();
    const auto ed = e.data();
    std::vector<Real> delta(n * k);
    std::vector<std::size_t> back(n * k, 0);
    for (std::size_t t = 0; t < k; ++t) {
        delta[t] = p.trans(p.bos(), t) + ed[t];
    }
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
            std::size_t best = 0;
            Real best_score = delta[(i - 1) * k] + p.trans(0, t);
            for (std::size_t a = 1; a < k; ++a) {
                const Real s = delta[(i - 1) * k + a] + p.trans(a, t);
                if (s > best_score) {
                    best_score = s;
                    best = a;
                }
            }
            delta[i * k + t] = ed[i * k + t] + best_score;
            back[i * k + t] = best;
        }
    }
    std::size_t last = 0;
    Real last_score = delta[(n - 1) * k] + p.trans(0, p.eos());
    for (std::size_t t = 1; t < k; ++t) {
        const Real s = delta[(n - 1) * k + t] + p.trans(t, p.eos());
        if (s > last_score) {
            last_score = s;
            last = t;
        }
    }
    std::vector<std::size_t> tags(n);
    tags[n - 1] = last;
    for (std::size_t i = n - 1; i > 0; --i) {
        tags[i - 1] = back[i * k + tags[i]];
    }
    const Real score = score_sequence(e, tags, p);
    return { std::move(tags), score };
}

#define NER_INSTANTIATE_CRF(Real)                                              \
    template struct CrfParams<Real>;                                           \
    template auto emissions(Tape<Real>&,                                       \
                            const CrfParams<Real>&,                            \
                            std::span<const Tensor<Real>>) -> Tensor<Real>;    \
    template auto score_sequence(const Tensor<Real>&,                          \
                                 std::span<const std::size_t>,                 \
                                 const CrfParams<Real>&) -> Real;              \
    template auto log_partition(const Tensor<Real>&, const CrfParams<Real>&)   \
      -> Real;                                                                 \
    template auto tag_marginals(const Tensor<Real>&, const CrfParams<Real>&)   \
      -> std::vector<Real>;                                                    \
    template auto nll_loss(Tape<Real>&,                                        \
                           const Tensor<Real>&,                                \
                           std::span<const std::size_t>,                       \
                           const CrfParams<Real>&) -> Tensor<Real>;            \
    template auto viterbi_decode(const Tensor<Real>&, const CrfParams<Real>&)  \
      -> Decoded<Real>;

NER_INSTANTIATE_CRF(float)
NER_INSTANTIATE_CRF(double)

#undef NER_INSTANTIATE_CRF

} // namespace ner

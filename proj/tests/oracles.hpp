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

// Reference implementations used only by the tests. None of them calls
// into the code under test beyond reading tensor values.

#pragma once

#include "ner/crf.hpp"
#include "ner/rng.hpp"
#include "ner/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <numeric>
#include <string>
#include <vector>

namespace oracle {

using ner::Tape;
using ner::Tensor;
using Loss = std::function<Tensor<double>(Tape<double>&)>;

struct GradReport
{
    std::size_t checked = 0;
    std::size_t failures = 0;
    double worst = 0.0; // largest relative error seen
    std::string detail;

    [[nodiscard]] auto ok() const -> bool { return failures == 0 && checked > 0; }
};

/// Relative error test: |a - b| <= rtol * max(|a|, |b|), with an
/// absolute floor for values that are both essentially zero.
inline auto close(double a, double b, double rtol, double atol = 1e-8) -> bool
{
    const double diff = std::abs(a - b);
    return diff <= atol || diff <= rtol * std::max(std::abs(a), std::abs(b));
}

inline auto relative_error(double a, double b) -> double
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Compares tape gradients of `loss` against central differences for
/// every listed parameter. At most `per_param` coordinates of each
/// parameter are probed (chosen by `seed`); 0 means all of them.
/// Non-finite coordinates are skipped.
inline auto check_gradients(const Loss& loss,
                            std::vector<Tensor<double>> params,
                            double rtol = 1e-4,
                            std::size_t per_param = 0,
                            std::uint64_t seed = 0,
                            double step = 1e-5) -> GradReport
{
    for (auto& p : params) {
        p.zero_grad();
    }
    {
        Tape<double> tape;
        const auto value = loss(tape);
        tape.backward(value);
    }
    std::vector<std::vector<double>> analytic;
    for (const auto& p : params) {
        const auto g = p.grad();
        analytic.emplace_back(g.begin(), g.end());
        if (analytic.back().empty()) {
            analytic.back().assign(p.size(), 0.0);
        }
    }

    const auto evaluate = [&]() {
        Tape<double> tape { Tape<double>::Mode::inference };
        return loss(tape).item();
    };

    GradReport report;
    ner::Rng rng { seed };
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto data = params[k].data();
        std::vector<std::size_t> coords(data.size());
        std::iota(coords.begin(), coords.end(), std::size_t { 0 });
        if (per_param != 0 && coords.size() > per_param) {
            rng.shuffle(coords);
            coords.resize(per_param);
        }
        for (const auto i : coords) {
            const double saved = data[i];
            if (!std::isfinite(saved)) {
                continue; // structural -inf entries are constants
            }
            data[i] = saved + step;
            const double up = evaluate();
            data[i] = saved - step;
            const double down = evaluate();
            data[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double tape_value = analytic[k][i];
            ++report.checked;
            const double rel = relative_error(numeric, tape_value);
            if (!close(numeric, tape_value, rtol)) {
                ++report.failures;
                if (rel > report.worst) {
                    report.detail = "param " + std::to_string(k) + " coord "
                                    + std::to_string(i) + ": tape "
                                    + std::to_string(tape_value) + " vs fd "
                                    + std::to_string(numeric);
                }
            }
            if (std::max(std::abs(numeric), std::abs(tape_value)) > 1e-6) {
                report.worst = std::max(report.worst, rel);
            }
        }
    }
    return report;
}

/// Tensor of the given shape filled uniformly from [lo, hi].
inline auto random_tensor(ner::Shape shape,
                          ner::Rng& rng,
                          double lo = -1.0,
                          double hi = 1.0,
                          bool requires_grad = true) -> Tensor<double>
{
    std::vector<double> data(ner::shape_size(shape));
    for (auto& v : data) {
        v = rng.uniform(lo, hi);
    }
    return { std::move(shape), std::move(data), requires_grad };
}

/// A CRF instance described with plain arrays, independent of CrfParams.
struct CrfInstance
{
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> emissions;   // n x k
    std::vector<double> start;       // BOS -> tag
    std::vector<double> stop;        // tag -> EOS
    std::vector<double> transitions; // k x k, [from][to]
};

inline auto random_crf_instance(ner::Rng& rng,
                                std::size_t n,
                                std::size_t k,
                                double spread = 3.0) -> CrfInstance
{
    CrfInstance c { n, k, {}, {}, {}, {} };
    for (std::size_t i = 0; i < n * k; ++i) {
        c.emissions.push_back(rng.uniform(-spread, spread));
    }
    for (std::size_t i = 0; i < k; ++i) {
        c.start.push_back(rng.uniform(-spread, spread));
        c.stop.push_back(rng.uniform(-spread, spread));
    }
    for (std::size_t i = 0; i < k * k; ++i) {
        c.transitions.push_back(rng.uniform(-spread, spread));
    }
    return c;
}

/// Loads an instance into the library's representation.
inline auto to_params(const CrfInstance& c, std::size_t input = 1)
  -> ner::CrfParams<double>
{
    auto p = ner::CrfParams<double>::from_transitions(input, c.k, c.transitions);
    auto t = p.transition.data();
    const std::size_t w = c.k + 2;
    for (std::size_t j = 0; j < c.k; ++j) {
        t[c.k * w + j] = c.start[j];
        t[j * w + c.k + 1] = c.stop[j];
    }
    return p;
}

inline auto to_emissions(const CrfInstance& c, bool requires_grad = false)
  -> Tensor<double>
{
    return { { c.n, c.k }, c.emissions, requires_grad };
}

/// Term-by-term sequence score, summed in the documented order:
/// emissions, BOS transition, tag transitions, EOS transition.
inline auto direct_score(const CrfInstance& c, const std::vector<std::size_t>& y)
  -> double
{
    double s = 0.0;
    for (std::size_t i = 0; i < c.n; ++i) {
        s += c.emissions[i * c.k + y[i]];
    }
    s += c.start[y[0]];
    for (std::size_t i = 1; i < c.n; ++i) {
        s += c.transitions[y[i - 1] * c.k + y[i]];
    }
    s += c.stop[y[c.n - 1]];
    return s;
}

/// Calls visit(y) for every one of the k^n sequences, in lexicographic
/// order (so the first maximum found is the lowest-index one).
inline void for_each_sequence(std::size_t n,
                              std::size_t k,
                              const std::function<void(const std::vector<std::size_t>&)>& visit)
{
    std::vector<std::size_t> y(n, 0);
    while (true) {
        visit(y);
        std::size_t pos = n;
        while (pos > 0) {
            --pos;
            if (++y[pos] < k) {
                break;
            }
            y[pos] = 0;
            if (pos == 0) {
                return;
            }
        }
        if (n == 0) {
            return;
        }
    }
}

struct Enumeration
{
    double log_z = 0.0;
    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best; // lexicographically first argmax
    std::vector<std::vector<std::size_t>> all_best;
    std::vector<double> scores; // in enumeration order
};

inline auto enumerate(const CrfInstance& c) -> Enumeration
{
    Enumeration out;
    for_each_sequence(c.n, c.k, [&](const std::vector<std::size_t>& y) {
        const double s = direct_score(c, y);
        out.scores.push_back(s);
        if (s > out.best_score) {
            out.best_score = s;
            out.best = y;
            out.all_best = { y };
        } else if (s == out.best_score) {
            out.all_best.push_back(y);
        }
    });
    long double acc = 0.0L;
    for (const double s : out.scores) {
        acc += std::exp(static_cast<long double>(s) - out.best_score);
    }
    out.log_z = out.best_score + static_cast<double>(std::log(acc));
    return out;
}

/// Scalar Nadam, written directly from the update rule.
struct ScalarNadam
{
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double m = 0.0;
    double v = 0.0;
    int t = 0;

    auto step(double theta, double g, double lr) -> double
    {
        t += 1;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        const double m_hat = m / (1.0 - std::pow(beta1, t + 1));
        const double v_hat = v / (1.0 - std::pow(beta2, t));
        const double numer = beta1 * m_hat + (1.0 - beta1) * g / (1.0 - std::pow(beta1, t));
        return theta - lr * numer / (std::sqrt(v_hat) + eps);
    }
};

/// Span with plain fields, kept separate from the library's ChunkSpan.
struct Span
{
    std::string type;
    std::size_t start;
    std::size_t end;

    friend auto operator<=>(const Span&, const Span&) = default;
};

struct Counts
{
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

/// Gold and predicted tag sequences generated together with the
/// TP/FP/FN counts the construction implies.
struct EvalCase
{
    std::vector<std::vector<std::string>> gold;
    std::vector<std::vector<std::string>> pred;
    std::map<std::string, Counts> expected; // per type
    Counts total;
};

inline auto render(const std::vector<Span>& spans, std::size_t length)
  -> std::vector<std::string>
{
    std::vector<std::string> tags(length, "O");
    for (const auto& s : spans) {
        tags[s.start] = "B-" + s.type;
        for (std::size_t i = s.start + 1; i < s.end; ++i) {
            tags[i] = "I-" + s.type;
        }
    }
    return tags;
}

/// Each gold span is kept (TP), dropped (FN), retyped (FN + FP) or
/// shortened (FN + FP); spurious spans are added on free positions (FP).
inline auto make_eval_case(ner::Rng& rng, std::size_t sentences) -> EvalCase
{
    static const std::vector<std::string> types { "PER", "LOC", "ORG", "MISC" };
    EvalCase out;
    for (const auto& t : types) {
        out.expected[t] = {};
    }
    for (std::size_t s = 0; s < sentences; ++s) {
        const std::size_t length = 4 + rng.below(12);
        std::vector<Span> gold;
        std::vector<Span> pred;
        std::vector<bool> used(length, false);
        std::size_t pos = 0;
        while (pos < length) {
            if (rng.bernoulli(0.35)) {
                const std::size_t len = std::min<std::size_t>(1 + rng.below(3), length - pos);
                gold.push_back({ types[rng.below(4)], pos, pos + len });
                for (std::size_t i = pos; i < pos + len; ++i) {
                    used[i] = true;
                }
                pos += len;
            } else {
                ++pos;
            }
        }
        for (const auto& g : gold) {
            switch (rng.below(4)) {
            case 0:
            default:
                pred.push_back(g);
                break;
            case 1:
                break;
            case 2: {
                auto other = g;
                other.type = types[(rng.below(3) + 1 + static_cast<std::size_t>(
                                      std::find(types.begin(), types.end(), g.type)
                                      - types.begin()))
                                   % 4];
                pred.push_back(other);
                break;
            }
            case 3:
                if (g.end - g.start > 1) {
                    pred.push_back({ g.type, g.start, g.end - 1 });
                } else {
                    pred.push_back(g);
                }
                break;
            }
        }
        for (std::size_t i = 0; i < length; ++i) {
            if (!used[i] && rng.bernoulli(0.15)) {
                pred.push_back({ types[rng.below(4)], i, i + 1 });
                used[i] = true;
            }
        }
        std::sort(pred.begin(), pred.end(), [](const Span& a, const Span& b) {
            return a.start < b.start;
        });

        // Direct set comparison.
        const std::set<Span> g_set(gold.begin(), gold.end());
        const std::set<Span> p_set(pred.begin(), pred.end());
        for (const auto& p : p_set) {
            auto& c = out.expected[p.type];
            if (g_set.contains(p)) {
                ++c.tp;
                ++out.total.tp;
            } else {
                ++c.fp;
                ++out.total.fp;
            }
        }
        for (const auto& g : g_set) {
            if (!p_set.contains(g)) {
                ++out.expected[g.type].fn;
                ++out.total.fn;
            }
        }
        out.gold.push_back(render(gold, length));
        out.pred.push_back(render(pred, length));
    }
    return out;
}

inline auto percent(std::size_t num, std::size_t den) -> double
{
    return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

inline auto f1_of(double p, double r) -> double
{
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

} // namespace oracle

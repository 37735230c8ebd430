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

#include "oracles.hpp"

#include "ner/errors.hpp"
#include "ner/eval.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

using namespace ner;

namespace {

using Tags = std::vector<std::string>;

} // namespace

TEST_SUITE("eval")
{
    TEST_CASE("extract_chunks examples")
    {
        CHECK(extract_chunks(Tags { "B-PER", "I-PER", "O" })
              == std::vector<ChunkSpan> { { "PER", 0, 2 } });
        CHECK(extract_chunks(Tags { "I-LOC", "I-LOC" })
              == std::vector<ChunkSpan> { { "LOC", 0, 2 } });
        CHECK(extract_chunks(Tags { "B-PER", "B-PER" })
              == std::vector<ChunkSpan> { { "PER", 0, 1 }, { "PER", 1, 2 } });
        CHECK(extract_chunks(Tags { "B-PER", "I-LOC", "I-LOC", "O", "I-ORG" })
              == std::vector<ChunkSpan> { { "PER", 0, 1 }, { "LOC", 1, 3 }, { "ORG", 4, 5 } });
        CHECK(extract_chunks(Tags {}).empty());
        CHECK(extract_chunks(Tags { "O", "O" }).empty());
    }

    TEST_CASE("rendering spans is idempotent under extraction")
    {
        Rng rng { 1 };
        for (int rep = 0; rep < 50; ++rep) {
            const auto c = oracle::make_eval_case(rng, 1);
            for (const auto* seq : { &c.gold[0], &c.pred[0] }) {
                const auto spans = extract_chunks(*seq);
                const auto tags = spans_to_tags(spans, seq->size());
                CHECK(tags == *seq);
                CHECK(extract_chunks(tags) == spans);
            }
        }
    }

    TEST_CASE("perfect prediction")
    {
        const TagSequences gold { { "B-PER", "I-PER", "O", "B-LOC" }, { "B-ORG", "B-MISC" } };
        const auto r = f1_report(gold, gold);
        for (const auto& type : r.types) {
            CHECK(r.counts(type).f1() == 100.0);
        }
        CHECK(r.total.precision() == 100.0);
        CHECK(r.total.recall() == 100.0);
        CHECK(r.total.f1() == 100.0);
    }

    TEST_CASE("boundary mismatch is a miss")
    {
        const auto r = f1_report({ { "B-PER", "I-PER" } }, { { "B-PER", "O" } });
        CHECK(r.counts("PER") == ChunkCounts { 0, 1, 1 });
        CHECK(r.counts("PER").precision() == 0.0);
        CHECK(r.counts("PER").recall() == 0.0);
        CHECK(r.counts("PER").f1() == 0.0);
    }

    TEST_CASE("hand-counted mixed example")
    {
        const TagSequences gold { { "B-PER", "O", "B-PER", "O", "B-LOC", "O" } };
        const TagSequences pred { { "B-PER", "O", "O", "O", "O", "B-ORG" } };
        const auto r = f1_report(gold, pred);
        CHECK(round2(r.counts("PER").precision()) == 100.0);
        CHECK(round2(r.counts("PER").recall()) == 50.0);
        CHECK(round2(r.counts("PER").f1()) == 66.67);
        CHECK(r.counts("ORG").precision() == 0.0);
        CHECK(round2(r.total.precision()) == 50.0);
        CHECK(round2(r.total.recall()) == 33.33);
        CHECK(round2(r.total.f1()) == 40.0);
    }

    TEST_CASE("zero entities: all zero, zero counts")
    {
        const auto r = f1_report({ { "O", "O" }, { "O" } }, { { "O", "O" }, { "O" } });
        CHECK(r.total == ChunkCounts {});
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(r.per_type[i] == ChunkCounts {});
            CHECK(r.per_type[i].f1() == 0.0);
        }
        const auto text = format_report(r);
        CHECK(text.find("0.00") != std::string::npos);
        CHECK(text.find("100") == std::string::npos);
    }

    TEST_CASE("misalignment is a hard error")
    {
        CHECK_THROWS_AS(f1_report({ { "O" } }, {}), ValidationError);
        CHECK_THROWS_AS(f1_report({ { "O", "O" } }, { { "O" } }), ValidationError);
    }

    TEST_CASE("randomized cases match the set-comparison oracle")
    {
        Rng rng { 2 };
        for (int rep = 0; rep < 20; ++rep) {
            const auto c = oracle::make_eval_case(rng, 1 + rng.below(8));
            const auto r = f1_report(c.gold, c.pred);
            for (const auto& [type, want] : c.expected) {
                CAPTURE(type);
                const auto& got = r.counts(type);
                CHECK(got.tp == want.tp);
                CHECK(got.fp == want.fp);
                CHECK(got.fn == want.fn);
                const double p = oracle::percent(want.tp, want.tp + want.fp);
                const double rc = oracle::percent(want.tp, want.tp + want.fn);
                CHECK(got.precision() == doctest::Approx(p).epsilon(1e-12));
                CHECK(got.recall() == doctest::Approx(rc).epsilon(1e-12));
                CHECK(got.f1() == doctest::Approx(oracle::f1_of(p, rc)).epsilon(1e-12));
            }
            CHECK(r.total.tp == c.total.tp);
            CHECK(r.total.fp == c.total.fp);
            CHECK(r.total.fn == c.total.fn);
            CHECK(r.total.tp <= std::min(r.total.tp + r.total.fn, r.total.tp + r.total.fp));

            // sentence order does not matter
            auto gold = c.gold;
            auto pred = c.pred;
            std::reverse(gold.begin(), gold.end());
            std::reverse(pred.begin(), pred.end());
            CHECK(f1_report(gold, pred) == r);
        }
    }

    TEST_CASE("micro average pools counts")
    {
        // PER: 1/1 correct, LOC: 0/3 correct; averaging percentages would give 50
        const TagSequences gold { { "B-PER", "B-LOC", "B-LOC", "B-LOC" } };
        const TagSequences pred { { "B-PER", "O", "O", "O" } };
        const auto r = f1_report(gold, pred);
        CHECK(r.total.precision() == 100.0);
        CHECK(r.total.recall() == 25.0);
        CHECK(r.total.f1() == doctest::Approx(40.0));
    }

    TEST_CASE("rounding is half-up at presentation only")
    {
        CHECK(round2(66.666666) == 66.67);
        CHECK(round2(33.333333) == 33.33);
        CHECK(round2(12.345) == 12.35);
        CHECK(round2(0.005) == 0.01);
        CHECK(round2(100.0) == 100.0);
    }

    TEST_CASE("report layout and JSON counts")
    {
        const auto r = f1_report({ { "B-PER", "O", "B-LOC" } }, { { "B-PER", "O", "O" } });
        const auto text = format_report(r);
        CHECK(text.find("Precision") != std::string::npos);
        CHECK(text.find("Recall") != std::string::npos);
        CHECK(text.find("F1-Score") != std::string::npos);
        CHECK(text.find("Avg/total") != std::string::npos);
        const auto first_loc = text.find("LOC");
        const auto first_per = text.find("PER");
        CHECK(first_loc < first_per);

        const auto j = nlohmann::json::parse(report_json(r));
        CHECK(j["PER"]["tp"] == 1);
        CHECK(j["LOC"]["fn"] == 1);
        CHECK(j["total"]["precision"] == 100.0);
        CHECK(j["total"]["recall"] == 50.0);
    }
}

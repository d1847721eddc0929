/*
 * Copyright 2026 The TaxoRAG Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "taxorag/eval.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "support/testing.hpp"
#include "taxorag/errors.hpp"
#include "taxorag/mock_providers.hpp"

namespace taxorag {
namespace {

using testing::order_result;

const PromptSet& prompts() {
    static const PromptSet p = PromptSet::builtin();
    return p;
}

TEST(RankMetrics, AbstentionExample) {
    const std::vector<ClassificationResult> r = {order_result("1", "A", "A"), order_result("2", "A", std::nullopt),
                                                 order_result("3", "B", "B")};
    const auto m = rank_metrics(r, Rank::order);
    EXPECT_EQ(m.total, 3u);
    EXPECT_EQ(m.attempts, 2u);
    EXPECT_EQ(format_attempts(m), "2 (66.7%)");
    EXPECT_EQ(m.macro_accuracy, 1.0);
    EXPECT_EQ(m.macro_f1, 1.0);
    EXPECT_EQ(m.micro_accuracy, 1.0);
}

TEST(RankMetrics, MacroExample) {
    const std::vector<ClassificationResult> r = {order_result("1", "A", "A"), order_result("2", "A", "B"),
                                                 order_result("3", "B", "B")};
    const auto m = rank_metrics(r, Rank::order);
    EXPECT_EQ(m.attempts, 3u);
    EXPECT_EQ(m.macro_accuracy, 0.75);
    EXPECT_DOUBLE_EQ(*m.micro_accuracy, 2.0 / 3.0);
    // F1(A) = 2/3, F1(B) = 2/3.
    EXPECT_DOUBLE_EQ(*m.macro_f1, 2.0 / 3.0);
    EXPECT_EQ(format_attempts(m), "3 (100%)");
}

TEST(RankMetrics, ZeroAttemptsRenderAsDashes) {
    const std::vector<ClassificationResult> r = {order_result("1", "A", std::nullopt)};
    const auto m = rank_metrics(r, Rank::order);
    EXPECT_EQ(m.attempts, 0u);
    EXPECT_FALSE(m.macro_accuracy.has_value());
    EXPECT_EQ(format_metric(m.macro_accuracy), "--");
    EXPECT_EQ(format_metric(m.macro_f1), "--");
    EXPECT_EQ(format_attempts(m), "0 (0%)");
    // No truth at Species either: nothing to count.
    EXPECT_EQ(rank_metrics(r, Rank::species).total, 0u);
}

TEST(RankMetrics, PerfectPredictionsScoreOne) {
    const auto labels = read_labels(testing::fixtures_dir() / "labels.jsonl");
    std::vector<ClassificationResult> r;
    for (const auto& l : labels) r.push_back({l.sample_id, l.classification, l});
    for (const Rank rank : kReportedRanks) {
        const auto m = rank_metrics(r, rank);
        EXPECT_EQ(m.macro_accuracy, 1.0);
        EXPECT_EQ(m.macro_f1, 1.0);
        EXPECT_EQ(m.micro_accuracy, 1.0);
    }
}

TEST(RankMetrics, NamesCompareCaseInsensitively) {
    const std::vector<ClassificationResult> r = {order_result("1", "Araneae", "ARANEAE ")};
    EXPECT_EQ(rank_metrics(r, Rank::order).micro_accuracy, 1.0);
}

TEST(RankMetrics, Errors) {
    EXPECT_THROW((void)rank_metrics(std::vector<ClassificationResult>{}, Rank::order), InvalidInput);
    auto r = order_result("1", "A", "A");
    r.truth.sample_id = "2";
    EXPECT_THROW((void)rank_metrics(std::vector<ClassificationResult>{r}, Rank::order), InvalidInput);
}

TEST(RankMetrics, MatchesOracleOnRandomSets) {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> names = {"A", "B", "C", "D", "E"};
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        std::vector<ClassificationResult> results;
        std::vector<std::string> truth;
        std::vector<std::optional<std::string>> pred;
        for (std::size_t i = 0; i < n; ++i) {
            truth.push_back(names[rng() % 4]);
            pred.push_back(rng() % 4 == 0 ? std::nullopt : std::optional(names[rng() % 5]));
            results.push_back(order_result(std::to_string(i), truth.back(), pred.back()));
        }
        const auto got = rank_metrics(results, Rank::order);
        const auto want = oracle::rank_metrics(truth, pred);
        ASSERT_EQ(got.attempts, want.attempts);
        ASSERT_EQ(got.macro_accuracy.has_value(), want.macro_accuracy.has_value());
        if (!want.macro_accuracy) continue;
        EXPECT_NEAR(*got.macro_accuracy, *want.macro_accuracy, 1e-12);
        EXPECT_NEAR(*got.macro_f1, *want.macro_f1, 1e-12);
        EXPECT_NEAR(*got.micro_accuracy, *want.micro_accuracy, 1e-12);
        for (const double v : {*got.macro_accuracy, *got.macro_f1, *got.micro_accuracy, got.attempt_rate}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(SplitRareCommon, StrictThresholds) {
    const auto labels = read_labels(testing::fixtures_dir() / "labels.jsonl");
    const auto b = split_rare_common(labels);
    EXPECT_EQ(b.rare, std::vector<std::string>{"img01"});
    EXPECT_EQ(b.common, std::vector<std::string>{"img05"});
    EXPECT_EQ(b.neither, (std::vector<std::string>{"img02", "img03", "img04"}));
    EXPECT_EQ(b.missing_n_obs, 0u);

    const std::map<Rank, std::string> ant = {{Rank::phylum, "Arthropoda"},  {Rank::klass, "Insecta"},  
                                             {Rank::order, "Hymenoptera"},  {Rank::family, "Formicidae"},
                                             {Rank::genus, "Formica"},      {Rank::species, "Formica rufa"}};
    std::vector<GroundTruthLabel> odd = {make_ground_truth("x", ant, std::nullopt), make_ground_truth("y", ant, 6698)};
    const auto o = split_rare_common(odd);
    EXPECT_EQ(o.missing_n_obs, 1u);
    EXPECT_EQ(o.neither, std::vector<std::string>{"x"});
    EXPECT_EQ(o.rare, std::vector<std::string>{"y"});
}

TEST(ParseClaims, LinesMarkersAndNone) {
    EXPECT_EQ(parse_claims("- one\n\n2. two\n"), (std::vector<std::string>{"one", "two"}));
    EXPECT_TRUE(parse_claims("NONE").empty());
    EXPECT_TRUE(parse_claims("  \n").empty());
}

TEST(ParseVerdict, LeadingWord) {
    EXPECT_EQ(parse_verdict("Yes, it is."), true);
    EXPECT_EQ(parse_verdict("  no"), false);
    EXPECT_EQ(parse_verdict("maybe"), std::nullopt);
    EXPECT_EQ(parse_verdict("yesterday"), std::nullopt);
}

TEST(Faithfulness, AllSupported) {
    MockChat judge;
    const std::vector<std::string> ctx = {"Field notes: Argiope spiders build orb webs. They rest head down."};
    const auto f = faithfulness("Argiope spiders build orb webs. They rest head down.", ctx, judge, prompts());
    EXPECT_EQ(f.total, 2u);
    EXPECT_EQ(f.score, 1.0);
}

TEST(Faithfulness, HalfSupported) {
    MockChat judge;
    const std::vector<std::string> ctx = {"argiope SPIDERS build\norb webs.", "Unrelated text."};
    const auto f = faithfulness("Argiope spiders build orb webs. They eat only nectar.", ctx, judge, prompts());
    EXPECT_EQ(f.total, 2u);
    EXPECT_EQ(f.supported, 1u);
    EXPECT_EQ(f.score, 0.5);
}

TEST(Faithfulness, ClaimsDoNotSpanContexts) {
    MockChat judge;
    const std::vector<std::string> ctx = {"Bees collect", "nectar. Bees sting."};
    const auto f = faithfulness("Bees collect nectar. Bees sting. Bees sing.", ctx, judge, prompts());
    EXPECT_EQ(f.total, 3u);
    EXPECT_NEAR(*f.score, 1.0 / 3.0, 1e-12);
}

TEST(Faithfulness, NoClaimsIsUndefined) {
    testing::ScriptedChat judge(std::vector<std::string>{"NONE"});
    const auto f = faithfulness("Some answer.", std::vector<std::string>{"ctx"}, judge, prompts());
    EXPECT_FALSE(f.score.has_value());
    EXPECT_EQ(f.flags, std::vector<std::string>{"no-claims"});
    EXPECT_THROW((void)faithfulness(" ", std::vector<std::string>{}, judge, prompts()), InvalidInput);
}

TEST(Faithfulness, VerdictRepairThenFailure) {
    testing::ScriptedChat ok(std::vector<std::string>{"claim one", "hmm", "yes"});
    EXPECT_EQ(faithfulness("a.", std::vector<std::string>{"c"}, ok, prompts()).score, 1.0);
    testing::ScriptedChat bad(std::vector<std::string>{"claim one", "hmm", "still unsure"});
    const auto f = faithfulness("a.", std::vector<std::string>{"c"}, bad, prompts());
    EXPECT_FALSE(f.score.has_value());
    EXPECT_EQ(f.flags, std::vector<std::string>{"judge-parse-failure"});
}

// Reference values from an independent reimplementation of the float32 mock
// embedding pipeline.
TEST(AnswerRelevancy, MockStackMatchesHandComputation) {
    MockChat gen;
    MockEmbedder emb(64);
    const auto r = answer_relevancy(
        "Argiope spiders build orb webs. The abdomen is banded yellow and black. They live in grassland.",
        "Which spider builds an orb web with a zig-zag band?", gen, emb, prompts());
    ASSERT_EQ(r.questions.size(), 3u);
    EXPECT_EQ(r.questions[0], "Q: Argiope spiders build orb webs.");
    EXPECT_NEAR(*r.score, 0.06551288782619262, 1e-12);

    const auto bees = answer_relevancy(
        "Honey bees live in large colonies. Workers forage for nectar. The queen lays eggs. Drones do not sting.",
        "How are honey bee colonies organised?", gen, emb, prompts());
    EXPECT_EQ(bees.questions.size(), 3u);
    EXPECT_NEAR(*bees.score, 0.010572181341844672, 1e-12);
}

TEST(AnswerRelevancy, SingleQuestionIsThatCosine) {
    MockChat gen;
    MockEmbedder emb(64);
    const auto r = answer_relevancy("Monarch butterflies migrate.", "Do monarch butterflies migrate?", gen, emb,
                                    prompts(), 1);
    EXPECT_NEAR(*r.score, 0.14790303664457824, 1e-12);
    EXPECT_DOUBLE_EQ(*r.score, cosine(emb.embed_one("Q: Monarch butterflies migrate."),
                                      emb.embed_one("Do monarch butterflies migrate?")));
    // Negative means clamp to zero.
    const auto neg = answer_relevancy("Monarch butterflies migrate.", "Where do monarchs migrate?", gen, emb,
                                      prompts(), 1);
    EXPECT_EQ(neg.score, 0.0);
}

TEST(AnswerRelevancy, QueryIdenticalQuestionsScoreOne) {
    testing::ScriptedChat gen(std::vector<std::string>{"What is it?\nWhat is it?\nWhat is it?"});
    MockEmbedder emb(32);
    const auto r = answer_relevancy("An answer.", "What is it?", gen, emb, prompts());
    EXPECT_NEAR(*r.score, 1.0, 1e-12);
}

TEST(AnswerRelevancy, GeneratorFailureIsUndefined) {
    testing::ScriptedChat gen([](const ChatRequest&) -> std::string {
        throw ProviderError(ProviderError::Kind::timeout, "timed out");
    });
    MockEmbedder emb(8);
    const auto r = answer_relevancy("An answer.", "query", gen, emb, prompts());
    EXPECT_FALSE(r.score.has_value());
    EXPECT_EQ(r.flags, std::vector<std::string>{"generator-failure"});

    testing::ScriptedChat empty(std::vector<std::string>{"\n"});
    EXPECT_EQ(answer_relevancy("An answer.", "query", empty, emb, prompts()).flags,
              std::vector<std::string>{"no-questions"});
}

TEST(Quantile, LinearInterpolation) {
    const std::vector<double> v = {0.2, 0.5, 0.8, 0.9};
    EXPECT_NEAR(quantile_linear(v, 0.5), 0.65, 1e-12);
    EXPECT_NEAR(quantile_linear(v, 0.25), 0.425, 1e-12);
    EXPECT_NEAR(quantile_linear(v, 0.75), 0.825, 1e-12);
    EXPECT_EQ(quantile_linear(v, 0.0), 0.2);
    EXPECT_EQ(quantile_linear(v, 1.0), 0.9);
    EXPECT_EQ(quantile_linear(std::vector<double>{3.0}, 0.3), 3.0);
}

TEST(Quantile, MatchesOracle) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> v(1 + rng() % 20);
        for (auto& x : v) x = u(rng);
        std::sort(v.begin(), v.end());
        const double p = u(rng);
        EXPECT_NEAR(quantile_linear(v, p), oracle::quantile(v, p), 1e-12);
    }
}

TEST(BoxSummary, FencesAndOutliers) {
    const auto b = box_summary({0.9, 0.2, 0.8, 0.5});
    ASSERT_TRUE(b.has_value());
    EXPECT_NEAR(b->median, 0.65, 1e-12);
    EXPECT_NEAR(b->iqr, 0.4, 1e-12);
    EXPECT_EQ(b->outliers, 0u);
    EXPECT_EQ(box_summary({1, 1, 1, 1, 100})->outliers, 1u);
    EXPECT_FALSE(box_summary({}).has_value());
}

}  // namespace
}  // namespace taxorag

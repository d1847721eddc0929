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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "taxorag/prompts.hpp"
#include "taxorag/providers.hpp"
#include "taxorag/records.hpp"
#include "taxorag/taxonomy.hpp"

namespace taxorag {

struct ClassificationResult {
    std::string sample_id;
    Classification predicted;
    GroundTruthLabel truth;
};

struct RankMetrics {
    Rank rank = Rank::phylum;
    /// Samples whose ground truth has this rank.
    std::size_t total = 0;
    /// Predictions with an entry at this rank.
    std::size_t attempts = 0;
    double attempt_rate = 0.0;
    /// Absent iff attempts == 0.
    std::optional<double> macro_accuracy;
    std::optional<double> macro_f1;
    std::optional<double> micro_accuracy;
};

/// Per-rank scores over attempted samples. Macro accuracy averages per-class
/// accuracy over the true classes; macro F1 averages per-class F1 over the
/// union of true and predicted labels. Names compare via taxon_key. Throws
/// InvalidInput on an empty result set or mismatched ids.
[[nodiscard]] RankMetrics rank_metrics(std::span<const ClassificationResult> results, Rank rank);

inline constexpr std::uint64_t kRareBelow = 6699;
inline constexpr std::uint64_t kCommonAbove = 60562;

struct RarityBuckets {
    std::vector<std::string> rare;
    std::vector<std::string> common;
    /// Between the thresholds, equal to one, or without n_obs.
    std::vector<std::string> neither;
    std::size_t missing_n_obs = 0;
};

/// rare: n_obs < 6699; common: n_obs > 60562; everything else: neither.
[[nodiscard]] RarityBuckets split_rare_common(std::span<const GroundTruthLabel> labels);

struct FaithfulnessScore {
    /// supported / total; absent when there are no claims or the judge failed.
    std::optional<double> score;
    std::size_t total = 0;
    std::size_t supported = 0;
    std::vector<std::string> flags;
};

/// Claims in a claim-extraction reply: one per non-blank line, list markers
/// removed; a lone "NONE" means no claims.
[[nodiscard]] std::vector<std::string> parse_claims(std::string_view reply);

/// "yes"/"no" at the start of a verdict reply, or nullopt.
[[nodiscard]] std::optional<bool> parse_verdict(std::string_view reply);

/// Extracts the answer's claims, then asks for a verdict on each against the
/// contexts. Unparseable verdicts are re-asked once; a second failure leaves
/// the score undefined with the flag "judge-parse-failure".
[[nodiscard]] FaithfulnessScore faithfulness(std::string_view answer, std::span<const std::string> contexts,
                                             ChatClient& judge, const PromptSet& prompts);

struct RelevancyScore {
    /// Mean cosine(question, query), clamped to [0, 1]; absent on generator failure.
    std::optional<double> score;
    std::vector<std::string> questions;
    std::vector<std::string> flags;
};

/// Generates `n` questions from the answer and averages their cosine to the query.
[[nodiscard]] RelevancyScore answer_relevancy(std::string_view answer, std::string_view query, ChatClient& generator,
                                              Embedder& embedder, const PromptSet& prompts, std::size_t n = 3);

struct RagScores {
    std::string sample_id;
    Variant variant = Variant::simple_rag;
    FaithfulnessScore faithfulness;
    RelevancyScore relevancy;
};

[[nodiscard]] nlohmann::json to_json(const RagScores& s);

/// Quantile with linear interpolation between closest ranks (h = (n-1)p).
/// `sorted` must be ascending and non-empty.
[[nodiscard]] double quantile_linear(std::span<const double> sorted, double p);

struct BoxSummary {
    std::size_t n = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double iqr = 0.0;
    double lower_fence = 0.0;
    double upper_fence = 0.0;
    /// Values outside the 1.5 IQR fences.
    std::size_t outliers = 0;
};

/// Box-plot statistics; nullopt for an empty sample.
[[nodiscard]] std::optional<BoxSummary> box_summary(std::vector<double> values);

/// Renders a metric for tables: fixed four decimals, or "--" when absent.
[[nodiscard]] std::string format_metric(const std::optional<double>& v);

/// Attempts cell for text tables: "217 (90.4%)", with "0 (0%)" and "240 (100%)" at the extremes.
[[nodiscard]] std::string format_attempts(const RankMetrics& m);

/// Writes `<stem>.csv` and `<stem>.txt` with one row per (rank, variant).
void write_classification_report(const std::filesystem::path& dir, const std::string& stem,
                                 const std::map<Variant, std::vector<RankMetrics>>& by_variant);

/// Writes rag_scores.jsonl, rag_scores.csv and rag_summary.{csv,txt}.
void write_rag_report(const std::filesystem::path& dir, const std::vector<RagScores>& scores);

}  // namespace taxorag

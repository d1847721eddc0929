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

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "taxorag/errors.hpp"
#include "taxorag/mock_providers.hpp"
#include "taxorag/text.hpp"

namespace taxorag {

namespace {

struct LabelCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

std::string strip_list_marker(std::string_view line) {
    std::string_view v = text::trim(line);
    if (v.starts_with("\xE2\x80\xA2")) {
        v.remove_prefix(3);
    } else if (!v.empty() && (v.front() == '-' || v.front() == '*' || v.front() == '+')) {
        v.remove_prefix(1);
    } else {
        std::size_t d = 0;
        while (d < v.size() && v[d] >= '0' && v[d] <= '9') ++d;
        if (d > 0 && d < v.size() && (v[d] == '.' || v[d] == ')')) v.remove_prefix(d + 1);
    }
    return std::string(text::trim(v));
}

std::optional<bool> ask_verdict(ChatClient& judge, ChatRequest req) {
    if (auto v = parse_verdict(judge.chat(req).text)) return v;
    req.user += "\n\nAnswer with a single word: yes or no.";
    return parse_verdict(judge.chat(req).text);
}

}  // namespace

RankMetrics rank_metrics(std::span<const ClassificationResult> results, Rank rank) {
    if (results.empty()) throw InvalidInput("rank_metrics needs at least one result");
    RankMetrics m;
    m.rank = rank;

    std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // truth key -> (correct, attempted)
    std::map<std::string, LabelCounts> per_label;
    std::size_t correct = 0;
    for (const auto& r : results) {
        if (r.sample_id != r.truth.sample_id) {
            throw InvalidInput(fmt::format("result '{}' is paired with label '{}'", r.sample_id, r.truth.sample_id));
        }
        const auto truth = r.truth.classification.name_at(rank);
        if (!truth) continue;
        ++m.total;
        const auto pred = r.predicted.name_at(rank);
        if (!pred) continue;
        ++m.attempts;
        const std::string t = taxon_key(*truth);
        const std::string p = taxon_key(*pred);
        const bool hit = t == p;
        auto& cls = per_class[t];
        ++cls.second;
        if (hit) {
            ++cls.first;
            ++correct;
            ++per_label[t].tp;
        } else {
            ++per_label[t].fn;
            ++per_label[p].fp;
        }
    }
    m.attempt_rate = m.total == 0 ? 0.0 : static_cast<double>(m.attempts) / static_cast<double>(m.total);
    if (m.attempts == 0) return m;

    double acc_sum = 0.0;
    for (const auto& [key, c] : per_class) acc_sum += static_cast<double>(c.first) / static_cast<double>(c.second);
    m.macro_accuracy = acc_sum / static_cast<double>(per_class.size());

    double f1_sum = 0.0;
    for (const auto& [key, c] : per_label) {
        const std::size_t denom = 2 * c.tp + c.fp + c.fn;
        f1_sum += denom == 0 ? 0.0 : static_cast<double>(2 * c.tp) / static_cast<double>(denom);
    }
    m.macro_f1 = f1_sum / static_cast<double>(per_label.size());
    m.micro_accuracy = static_cast<double>(correct) / static_cast<double>(m.attempts);
    return m;
}

RarityBuckets split_rare_common(std::span<const GroundTruthLabel> labels) {
    RarityBuckets b;
    for (const auto& l : labels) {
        if (!l.n_obs) {
            ++b.missing_n_obs;
            spdlog::warn("label {} has no observation count; placed in neither", l.sample_id);
            b.neither.push_back(l.sample_id);
        } else if (*l.n_obs < kRareBelow) {
            b.rare.push_back(l.sample_id);
        } else if (*l.n_obs > kCommonAbove) {
            b.common.push_back(l.sample_id);
        } else {
            b.neither.push_back(l.sample_id);
        }
    }
    return b;
}

std::vector<std::string> parse_claims(std::string_view reply) {
    std::vector<std::string> out;
    for (const auto line : text::lines(reply)) {
        std::string c = strip_list_marker(line);
        if (c.empty()) continue;
        out.push_back(std::move(c));
    }
    if (out.size() == 1 && text::ascii_lower(out.front()) == "none") out.clear();
    return out;
}

std::optional<bool> parse_verdict(std::string_view reply) {
    std::string_view v = text::trim(reply);
    while (!v.empty() && (v.front() == '*' || v.front() == '"' || v.front() == '\'')) v.remove_prefix(1);
    std::size_t n = 0;
    while (n < v.size() && std::isalpha(static_cast<unsigned char>(v[n]))) ++n;
    const std::string word = text::ascii_lower(v.substr(0, n));
    if (word == "yes") return true;
    if (word == "no") return false;
    return std::nullopt;
}

FaithfulnessScore faithfulness(std::string_view answer, std::span<const std::string> contexts, ChatClient& judge,
                               const PromptSet& prompts) {
    if (text::trim(answer).empty()) throw InvalidInput("faithfulness needs a non-empty answer");
    FaithfulnessScore out;

    ChatRequest extract;
    extract.purpose = ChatPurpose::extract_claims;
    extract.user = prompts.claims.render({{"answer", std::string(answer)}});
    extract.fields = {{"answer", std::string(answer)}};
    const auto claims = parse_claims(judge.chat(extract).text);
    out.total = claims.size();
    if (claims.empty()) {
        out.flags.emplace_back("no-claims");
        return out;
    }

    std::string joined;
    std::string separated;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        if (i > 0) {
            joined += "\n\n";
            separated += kContextRecordSeparator;
        }
        joined += contexts[i];
        separated += contexts[i];
    }
    for (const auto& claim : claims) {
        ChatRequest req;
        req.purpose = ChatPurpose::judge_claim;
        req.user = prompts.verdict.render({{"context", joined}, {"claim", claim}});
        req.fields = {{"claim", claim}, {"context", separated}};
        const auto verdict = ask_verdict(judge, std::move(req));
        if (!verdict) {
            out.flags.emplace_back("judge-parse-failure");
            out.supported = 0;
            return out;
        }
        if (*verdict) ++out.supported;
    }
    out.score = static_cast<double>(out.supported) / static_cast<double>(out.total);
    return out;
}

RelevancyScore answer_relevancy(std::string_view answer, std::string_view query, ChatClient& generator,
                                Embedder& embedder, const PromptSet& prompts, std::size_t n) {
    if (text::trim(answer).empty() || text::trim(query).empty()) {
        throw InvalidInput("answer relevancy needs a non-empty answer and query");
    }
    if (n == 0) throw InvalidInput("answer relevancy needs at least one question");
    RelevancyScore out;
    ChatRequest req;
    req.purpose = ChatPurpose::generate_questions;
    req.user = prompts.questions.render({{"n", std::to_string(n)}, {"answer", std::string(answer)}});
    req.fields = {{"answer", std::string(answer)}, {"n", std::to_string(n)}};
    try {
        const std::string reply = generator.chat(req).text;
        for (const auto line : text::lines(reply)) {
            if (out.questions.size() == n) break;
            const auto q = text::trim(line);
            if (!q.empty()) out.questions.emplace_back(q);
        }
    } catch (const ProviderError& e) {
        spdlog::warn("question generation failed: {}", e.what());
        out.flags.emplace_back("generator-failure");
        return out;
    }
    if (out.questions.empty()) {
        out.flags.emplace_back("no-questions");
        return out;
    }
    std::vector<std::string> texts{std::string(query)};
    texts.insert(texts.end(), out.questions.begin(), out.questions.end());
    const auto vecs = embed_texts(embedder, texts);
    double sum = 0.0;
    for (std::size_t i = 1; i < vecs.size(); ++i) sum += cosine(vecs[i], vecs[0]);
    out.score = std::clamp(sum / static_cast<double>(out.questions.size()), 0.0, 1.0);
    return out;
}

nlohmann::json to_json(const RagScores& s) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    std::vector<std::string> flags = s.faithfulness.flags;
    flags.insert(flags.end(), s.relevancy.flags.begin(), s.relevancy.flags.end());
    return {{"sample_id", s.sample_id},
            {"variant", std::string(to_string(s.variant))},
            {"faithfulness", opt(s.faithfulness.score)},
            {"claims_total", s.faithfulness.total},
            {"claims_supported", s.faithfulness.supported},
            {"answer_relevancy", opt(s.relevancy.score)},
            {"questions", s.relevancy.questions},
            {"flags", flags}};
}

double quantile_linear(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InvalidInput("quantile of an empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::optional<BoxSummary> box_summary(std::vector<double> values) {
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    BoxSummary b;
    b.n = values.size();
    b.min = values.front();
    b.max = values.back();
    b.q1 = quantile_linear(values, 0.25);
    b.median = quantile_linear(values, 0.5);
    b.q3 = quantile_linear(values, 0.75);
    b.iqr = b.q3 - b.q1;
    b.lower_fence = b.q1 - 1.5 * b.iqr;
    b.upper_fence = b.q3 + 1.5 * b.iqr;
    b.outliers = static_cast<std::size_t>(std::count_if(
        values.begin(), values.end(), [&](double v) { return v < b.lower_fence || v > b.upper_fence; }));
    return b;
}

std::string format_metric(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "--"; }

std::string format_attempts(const RankMetrics& m) {
    if (m.attempts == 0 || m.attempts == m.total) return fmt::format("{} ({:.0f}%)", m.attempts, 100.0 * m.attempt_rate);
    return fmt::format("{} ({:.1f}%)", m.attempts, 100.0 * m.attempt_rate);
}

}  // namespace taxorag

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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taxorag/chunk.hpp"
#include "taxorag/prompts.hpp"
#include "taxorag/providers.hpp"

namespace taxorag {

/// Budget tokenizer. Implementations must be deterministic, return 0 exactly
/// for blank text, and be monotone in the number of whitespace words.
class TokenCounter {
  public:
    virtual ~TokenCounter() = default;
    [[nodiscard]] virtual std::size_t count(std::string_view text) const = 0;
    [[nodiscard]] virtual std::string id() const = 0;
};

/// One token per whitespace-separated word.
class WhitespaceTokenCounter final : public TokenCounter {
  public:
    [[nodiscard]] std::size_t count(std::string_view text) const override;
    [[nodiscard]] std::string id() const override { return "whitespace"; }
};

/// ceil(words * factor): a conservative stand-in for subword tokenizers.
class ScaledTokenCounter final : public TokenCounter {
  public:
    explicit ScaledTokenCounter(double factor = 1.3);
    [[nodiscard]] std::size_t count(std::string_view text) const override;
    [[nodiscard]] std::string id() const override;

  private:
    double factor_;
};

/// "whitespace" or "scaled"; throws ConfigError otherwise.
[[nodiscard]] std::unique_ptr<TokenCounter> make_token_counter(std::string_view kind, double factor);

[[nodiscard]] inline std::size_t count_tokens(std::string_view text, const TokenCounter& counter) {
    return counter.count(text);
}

struct SplitResult {
    std::vector<Chunk> chunks;
    /// One message per chunk that is a single token over budget.
    std::vector<std::string> warnings;
    std::vector<std::size_t> oversized;
};

/// Splits the document into token-budgeted chunks, trying blank lines first,
/// then line breaks, then whitespace, and greedily packing pieces at each
/// level. Each chunk's text is a verbatim slice of the document. Chunks are
/// not yet contextualized: token_count covers the text alone.
[[nodiscard]] SplitResult split_recursive(const SourceDocument& doc, std::size_t max_tokens,
                                          const TokenCounter& counter);

struct FilterDecision {
    bool useful = false;
    /// Situating text when useful; otherwise a description of the content type.
    std::string contextual_text;
    /// The judge never produced a parseable verdict.
    bool parse_failure = false;
};

inline constexpr std::string_view kJudgeParseFailure = "judge-parse-failure";

/// Reads the first verdict object {"useful": bool, "contextual_text": string},
/// allowing surrounding prose or code fences. Returns nullopt when none is found.
[[nodiscard]] std::optional<FilterDecision> parse_filter_reply(std::string_view reply);

/// Asks the judge whether the chunk is worth embedding. Empty chunks are
/// rejected without a call. An unparseable reply is re-asked once with a
/// repair instruction; a second failure yields useful=false.
[[nodiscard]] FilterDecision filter_chunk(const Chunk& chunk, const SourceDocument& doc, ChatClient& judge,
                                          const PromptTemplate& prompt);

/// Attaches the decision's contextual text and recounts tokens as
/// count(context) + 1 separator + count(text). Context words are cut from the
/// end until the total fits `max_tokens`; the chunk text is never touched.
/// Throws InvalidInput when the decision is not useful.
[[nodiscard]] Chunk contextualize(Chunk chunk, const FilterDecision& decision, std::size_t max_tokens,
                                  const TokenCounter& counter);

struct IngestOptions {
    std::size_t max_tokens = 1024;
    std::size_t max_concurrent_requests = 4;
};

struct IngestStats {
    std::size_t documents = 0;
    std::size_t documents_failed = 0;
    std::size_t chunks_produced = 0;
    /// Includes oversized chunks, which are never embedded.
    std::size_t chunks_filtered = 0;
    std::size_t chunks_retained = 0;
    std::size_t chunks_oversized = 0;
    std::size_t judge_parse_failures = 0;
    /// "doc_id: reason" per failed document.
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
};

struct IngestResult {
    /// Retained chunks sorted by (doc_id, seq).
    std::vector<Chunk> chunks;
    IngestStats stats;
};

/// Split, filter and contextualize every document. A failing document (invalid
/// record, duplicate id, provider error) is counted and skipped; its chunks do
/// not enter the totals.
[[nodiscard]] IngestResult ingest_corpus(std::span<const SourceDocument> docs, ChatClient& judge,
                                         const TokenCounter& counter, const PromptTemplate& prompt,
                                         const IngestOptions& options = {});

}  // namespace taxorag

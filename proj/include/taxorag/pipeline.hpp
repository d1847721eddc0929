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

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "taxorag/prompts.hpp"
#include "taxorag/providers.hpp"
#include "taxorag/records.hpp"
#include "taxorag/vectorstore.hpp"

namespace taxorag {

struct RetrievalParams {
    /// Simple pipeline: hits per caption.
    std::size_t k = 30;
    /// Advanced pipeline: chunks kept after reranking.
    std::size_t rerank_top = 10;
    /// Advanced pipeline: per-query MMR settings.
    MmrParams mmr;
    /// Advanced pipeline: generated queries in addition to the caption.
    std::size_t n_queries = 3;
};

struct ContextHit {
    SearchHit hit;
    std::size_t query_id = 0;
};

struct RetrievalContext {
    Variant variant = Variant::simple_rag;
    std::vector<ContextHit> hits;
    /// e.g. "empty-store", "multiquery-fallback".
    std::vector<std::string> flags;
};

/// Timestamp used for caption records under mock providers, so reruns are byte-identical.
inline constexpr std::string_view kMockTimestamp = "1970-01-01T00:00:00Z";

/// Current UTC time as ISO-8601 with seconds.
[[nodiscard]] std::string utc_timestamp();

/// Captions one image. Image and provider failures surface as an error record.
[[nodiscard]] CaptionRecord generate_caption(const ImageSample& sample, ChatClient& captioner,
                                             const PromptTemplate& prompt, const std::string& timestamp);

/// Embeds the caption and returns the top-k cosine hits.
[[nodiscard]] RetrievalContext retrieve_simple(std::string_view caption, const VectorStore& store,
                                               Embedder& embedder, std::size_t k = 30);

/// Alternative queries from a multiquery reply: one per non-blank line, list
/// markers removed, duplicates and copies of the original dropped, at most `n`.
[[nodiscard]] std::vector<std::string> parse_queries(std::string_view reply, std::string_view original,
                                                     std::size_t n);

/// Multiquery generation, per-query MMR, pooled dedupe in (query, MMR rank)
/// order, rerank against the caption, top `rerank_top` by score then chunk_id.
[[nodiscard]] RetrievalContext retrieve_advanced(std::string_view caption, const VectorStore& store,
                                                 Embedder& embedder, ChatClient& multiquery, Reranker& reranker,
                                                 const PromptTemplate& multiquery_prompt,
                                                 const RetrievalParams& params = {});

/// Context block shown to the responder: a numbered header with the chunk's
/// taxon, rank and source, followed by its embedded text.
[[nodiscard]] std::string render_context(const std::vector<ContextHit>& hits);

/// Parses the five tagged sections. Classification lines read "Rank: Name";
/// list markers and emphasis are stripped, unknown ranks ignored, placeholder
/// names ("unknown", "n/a", ...) treated as abstention, and the result passed
/// through enforce_prefix. Returns nullopt when a section is missing.
[[nodiscard]] std::optional<StructuredResponse> parse_structured_response(std::string_view raw);

/// Fills the response template and parses the reply, re-asking once on a
/// parse failure. A second failure yields a fully abstained response that
/// keeps the raw text and sets parse_failure.
[[nodiscard]] StructuredResponse generate_response(std::string_view caption, const RetrievalContext& context,
                                                   ChatClient& chat, const PromptTemplate& prompt);

/// Response from the caption alone; the context block is omitted.
[[nodiscard]] StructuredResponse classify_naive_llm(std::string_view caption, ChatClient& chat,
                                                    const PromptTemplate& prompt);

/// Response from the image alone, sent as an attachment to a vision model.
[[nodiscard]] StructuredResponse classify_naive_vlm(std::span<const std::uint8_t> image, ChatClient& vision,
                                                    const PromptTemplate& prompt);

/// Everything a classification run needs. `store` may be null for the naive variants.
struct PipelineContext {
    const PromptSet* prompts = nullptr;
    const VectorStore* store = nullptr;
    ChatClient* responder = nullptr;
    ChatClient* vision = nullptr;
    ChatClient* multiquery = nullptr;
    Embedder* embedder = nullptr;
    Reranker* reranker = nullptr;
    RetrievalParams retrieval;
};

struct ClassifyInput {
    std::string sample_id;
    std::optional<std::string> caption;
    std::optional<std::filesystem::path> image;
    /// Set when the upstream caption failed; the sample is reported as an error.
    std::optional<std::string> upstream_error;
};

/// Runs one sample through a variant. Never throws: failures become an error record.
[[nodiscard]] ResultRecord classify_sample(const PipelineContext& ctx, Variant variant, const ClassifyInput& input);

/// Resumable, order-stable batch over samples.
struct BatchSpec {
    std::filesystem::path out;
    std::vector<std::string> sample_ids;
    /// Produces the record for sample i. Must not throw.
    std::function<nlohmann::json(std::size_t)> process;
    /// Whether a record counts as completed (skipped on resume).
    std::function<bool(const nlohmann::json&)> is_ok;
    /// Identity of the run; a resume is refused unless it matches the stored manifest.
    nlohmann::json identity;
    /// Extra manifest fields (prompt hashes, provider ids, store checksum).
    nlohmann::json manifest_extra = nlohmann::json::object();
    bool resume = false;
    std::size_t workers = 1;
    const std::atomic<bool>* stop = nullptr;
};

struct BatchOutcome {
    std::size_t total = 0;
    std::size_t ok = 0;
    std::size_t errors = 0;
    /// Completed records carried over from a previous run.
    std::size_t skipped = 0;
    /// Samples not attempted because the run was stopped.
    std::size_t pending = 0;
    bool interrupted = false;
};

[[nodiscard]] std::filesystem::path manifest_path(const std::filesystem::path& out);

/// Processes every sample not already completed and writes one record per line
/// in input order. Records are flushed as they complete; when `stop` is raised,
/// in-flight samples finish and the file holds everything completed so far.
/// Throws ConfigError when resuming against a different run identity.
BatchOutcome run_batch(const BatchSpec& spec);

}  // namespace taxorag

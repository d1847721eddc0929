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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "taxorag/chunk.hpp"
#include "taxorag/taxonomy.hpp"

// Line-delimited JSON records exchanged between pipeline stages. Every writer
// emits one compact object per line with keys in sorted order, UTF-8, LF.
namespace taxorag {

enum class Variant { simple_rag, advanced_rag, naive_llm, naive_vlm };

/// "simple-rag", "advanced-rag", "naive-llm", "naive-vlm".
[[nodiscard]] std::string_view to_string(Variant v) noexcept;
[[nodiscard]] Variant parse_variant(std::string_view label);
[[nodiscard]] bool uses_store(Variant v) noexcept;

/// One entry of an image manifest.
struct ImageSample {
    std::string sample_id;
    /// As written in the manifest.
    std::string image;
    /// `image` resolved against the manifest's directory.
    std::filesystem::path path;
};

struct CaptionRecord {
    std::string sample_id;
    std::string image;
    std::string caption;
    std::string captioner;
    std::string timestamp;
    std::optional<std::string> error;

    [[nodiscard]] bool ok() const noexcept { return !error.has_value(); }
};

struct ContextItem {
    std::string chunk_id;
    /// Cosine for Simple, rerank score for Advanced.
    double score = 0.0;
    /// 0 = original caption, i > 0 = i-th generated query.
    std::size_t query_id = 0;
};

struct StructuredResponse {
    Classification classification;
    /// Entries removed by prefix repair.
    std::vector<TaxonEntry> dropped;
    std::string shared_traits;
    std::string unique_traits;
    std::string confidence_commentary;
    std::string biodiversity_knowledge;
    std::string raw_text;
    bool parse_failure = false;
};

struct ResultRecord {
    std::string sample_id;
    Variant variant = Variant::simple_rag;
    std::optional<std::string> caption;
    std::vector<ContextItem> context;
    std::optional<StructuredResponse> response;
    std::vector<std::string> flags;
    std::optional<std::string> error;

    [[nodiscard]] bool ok() const noexcept { return !error.has_value(); }
};

// JSON mappings. Readers throw ParseError on missing or mistyped fields.
[[nodiscard]] nlohmann::json to_json(const SourceDocument& d);
[[nodiscard]] SourceDocument document_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const Chunk& c);
[[nodiscard]] Chunk chunk_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const CaptionRecord& r);
[[nodiscard]] CaptionRecord caption_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const Classification& c);
[[nodiscard]] Classification classification_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const StructuredResponse& r);
[[nodiscard]] StructuredResponse response_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const ResultRecord& r);
[[nodiscard]] ResultRecord result_from_json(const nlohmann::json& j);
/// {"sample_id", "taxonomy": {"Phylum": ..., ..., "Species": ...}, "n_obs"?}
[[nodiscard]] GroundTruthLabel label_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const GroundTruthLabel& l);

/// Compact, key-sorted serialization; invalid UTF-8 is replaced with U+FFFD.
[[nodiscard]] std::string dump_line(const nlohmann::json& j);

/// Calls `fn(object, line_number)` for each non-blank line. Throws
/// InvalidInput when the file cannot be opened and ParseError (with the line
/// number) on malformed JSON.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

[[nodiscard]] std::vector<SourceDocument> read_documents(const std::filesystem::path& path);
[[nodiscard]] std::vector<Chunk> read_chunks(const std::filesystem::path& path);
[[nodiscard]] std::vector<ImageSample> read_image_manifest(const std::filesystem::path& path);
[[nodiscard]] std::vector<CaptionRecord> read_captions(const std::filesystem::path& path);
[[nodiscard]] std::vector<ResultRecord> read_results(const std::filesystem::path& path);
[[nodiscard]] std::vector<GroundTruthLabel> read_labels(const std::filesystem::path& path);

/// Writes all lines to a temp file then renames over `path`.
void write_lines_atomic(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace taxorag

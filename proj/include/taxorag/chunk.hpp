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
#include <string>
#include <string_view>

#include "taxorag/taxonomy.hpp"

namespace taxorag {

enum class Source : std::uint8_t { wikipedia, wikispecies };

[[nodiscard]] std::string_view to_string(Source s) noexcept;
/// Case-insensitive; throws InvalidInput on anything else.
[[nodiscard]] Source parse_source(std::string_view label);

struct SourceDocument {
    std::string doc_id;
    Source source = Source::wikipedia;
    std::string taxon_name;
    TaxonRank taxon_rank;
    std::string text;
};

/// Metadata attached to every stored chunk.
struct ChunkMetadata {
    TaxonRank taxon_rank;
    Source source = Source::wikipedia;
    std::string taxon_name;

    friend bool operator==(const ChunkMetadata&, const ChunkMetadata&) = default;
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::uint32_t seq = 0;
    std::string text;
    /// Empty until contextualized.
    std::string contextual_text;
    /// Tokens of contextual_text + separator + text (or of text alone).
    std::uint32_t token_count = 0;
    ChunkMetadata metadata;

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Joins contextual text and chunk text with a blank line.
inline constexpr std::string_view kContextSeparator = "\n\n";

/// The text that gets embedded and reranked: contextual text, if any, then the chunk.
[[nodiscard]] std::string embedded_text(const Chunk& c);

/// `doc_id` + "#" + seq zero-padded to six digits.
[[nodiscard]] std::string make_chunk_id(std::string_view doc_id, std::uint32_t seq);

}  // namespace taxorag

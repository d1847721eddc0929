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

#include "taxorag/chunk.hpp"

#include <fmt/format.h>

#include "taxorag/errors.hpp"
#include "taxorag/text.hpp"

namespace taxorag {

std::string_view to_string(Source s) noexcept { return s == Source::wikipedia ? "Wikipedia" : "Wikispecies"; }

Source parse_source(std::string_view label) {
    const auto l = text::ascii_lower(text::trim(label));
    if (l == "wikipedia") return Source::wikipedia;
    if (l == "wikispecies") return Source::wikispecies;
    throw InvalidInput(fmt::format("unknown source '{}'", label));
}

std::string embedded_text(const Chunk& c) {
    if (c.contextual_text.empty()) return c.text;
    std::string out;
    out.reserve(c.contextual_text.size() + kContextSeparator.size() + c.text.size());
    out.append(c.contextual_text).append(kContextSeparator).append(c.text);
    return out;
}

std::string make_chunk_id(std::string_view doc_id, std::uint32_t seq) { return fmt::format("{}#{:06d}", doc_id, seq); }

}  // namespace taxorag

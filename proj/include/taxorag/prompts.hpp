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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace taxorag {

using PromptVars = std::map<std::string, std::string>;

/// A text template with `{name}` placeholders and `{{#name}}...{{/name}}`
/// sections. A section is kept when `name` is bound to a non-empty value.
/// Values are inserted verbatim (never re-expanded). Rendering appends
/// `thinking_dots` '.' characters.
struct PromptTemplate {
    std::string name;
    std::string text;
    std::size_t thinking_dots = 0;

    /// Throws InvalidInput when a placeholder outside a dropped section is unbound.
    [[nodiscard]] std::string render(const PromptVars& vars) const;
    /// SHA-256 over the template text and dot count.
    [[nodiscard]] std::string hash() const;
};

/// Every template the pipeline sends.
struct PromptSet {
    static constexpr std::size_t kDefaultThinkingDots = 256;

    PromptTemplate contextualize;  ///< chunk filter / contextualizer (JSON verdict)
    PromptTemplate caption;        ///< dense biocaption of an image
    PromptTemplate respond;        ///< five-part classification response
    PromptTemplate multiquery;     ///< alternative retrieval queries
    PromptTemplate claims;         ///< claim extraction for faithfulness
    PromptTemplate verdict;        ///< per-claim support verdict
    PromptTemplate questions;      ///< question generation for answer relevancy

    /// Templates compiled into the library from the repository's prompts/ directory.
    static PromptSet builtin(std::size_t thinking_dots = kDefaultThinkingDots);

    /// Reads `<dir>/<name>.txt` for each template, or the path given in
    /// `overrides` (keyed by template name). Templates with no file keep the
    /// built-in text.
    static PromptSet load(const std::filesystem::path& dir, std::size_t thinking_dots,
                          const std::map<std::string, std::filesystem::path>& overrides = {});

    [[nodiscard]] std::map<std::string, std::string> hashes() const;
};

}  // namespace taxorag

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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "taxorag/pipeline.hpp"
#include "taxorag/providers.hpp"

namespace taxorag {

/// Pipeline stages that each get their own provider settings.
inline constexpr std::string_view kStages[] = {"captioner", "filter_judge", "multiquery", "responder",
                                               "embedder",  "reranker",     "eval_judge"};

struct PipelineConfig {
    /// Directory of the config file; relative paths resolve against it.
    std::filesystem::path base_dir;

    std::filesystem::path store_path;
    std::size_t dim = 1024;

    std::string tokenizer = "whitespace";
    double token_factor = 1.3;
    std::size_t token_budget = 1024;

    RetrievalParams retrieval;
    /// Questions generated per answer for answer relevancy.
    std::size_t relevancy_questions = 3;

    std::map<std::string, ProviderConfig, std::less<>> providers;

    /// Empty means the built-in templates.
    std::filesystem::path prompts_dir;
    /// Per-template file overrides, keyed by template name.
    std::map<std::string, std::filesystem::path> prompt_files;
    std::size_t thinking_dots = 256;

    std::size_t max_concurrent_requests = 4;
    std::uint64_t seed = 0;

    /// Canonical form of the effective settings (paths as written).
    nlohmann::json canonical;

    [[nodiscard]] const ProviderConfig& provider(std::string_view stage) const;
    [[nodiscard]] bool all_mock() const;
    /// SHA-256 of the canonical JSON.
    [[nodiscard]] std::string hash() const;
    [[nodiscard]] PromptSet load_prompts() const;
};

/// Parses and validates a config document. Unknown keys, out-of-range values
/// and missing referenced files raise ConfigError. With `force_mock`, every
/// stage uses the mock provider.
[[nodiscard]] PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                                          bool force_mock = false);

[[nodiscard]] PipelineConfig load_config(const std::filesystem::path& path, bool force_mock = false);

}  // namespace taxorag

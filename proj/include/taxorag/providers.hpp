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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taxorag/embedding.hpp"

namespace taxorag {

/// Connection settings for one hosted model.
struct ProviderConfig {
    /// "mock" or "http".
    std::string kind = "mock";
    std::string base_url;
    std::string model;
    /// Name of the environment variable holding the API key (never the key itself).
    std::string api_key_env;
    double timeout_s = 60.0;
    int max_retries = 3;
    int max_concurrent_requests = 4;

    /// Throws ConfigError when a field is out of range or, for remote
    /// providers, when the key variable is unset.
    void validate(std::string_view stage) const;
    [[nodiscard]] bool is_mock() const noexcept { return kind == "mock"; }
    /// "mock" or "<base_url>|<model>".
    [[nodiscard]] std::string id() const;
};

/// What a chat call is for. Remote providers only use it for logging; the mock
/// providers dispatch on it.
enum class ChatPurpose {
    generic,
    filter_chunk,
    caption,
    multiquery,
    respond,
    extract_claims,
    judge_claim,
    generate_questions,
};

[[nodiscard]] std::string_view to_string(ChatPurpose p) noexcept;

struct ImageAttachment {
    std::vector<std::uint8_t> bytes;
    std::string mime_type;
};

struct ChatRequest {
    ChatPurpose purpose = ChatPurpose::generic;
    std::string system;
    std::string user;
    std::optional<ImageAttachment> image;
    /// Named inputs the prompt was rendered from, plus structured hints.
    /// Ignored by remote providers.
    std::map<std::string, std::string> fields;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct ChatReply {
    std::string text;
    std::optional<TokenUsage> usage;
};

struct RerankResult {
    std::size_t index = 0;
    double score = 0.0;
};

class ChatClient {
  public:
    virtual ~ChatClient() = default;
    /// Returns a non-empty reply or throws ProviderError.
    virtual ChatReply chat(const ChatRequest& request) = 0;
    [[nodiscard]] virtual std::string id() const = 0;
};

class Embedder {
  public:
    virtual ~Embedder() = default;
    /// One unit vector per input text, in order.
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
    [[nodiscard]] virtual std::size_t dim() const = 0;
    [[nodiscard]] virtual std::string id() const = 0;
};

class Reranker {
  public:
    virtual ~Reranker() = default;
    /// One result per document; `index` refers to the input position.
    virtual std::vector<RerankResult> rerank(std::string_view query, std::span<const std::string> docs) = 0;
    [[nodiscard]] virtual std::string id() const = 0;
};

/// Validates the batch (non-empty, no blank element), embeds, and checks that
/// the provider honoured arity and dimension.
[[nodiscard]] std::vector<EmbeddingVector> embed_texts(Embedder& embedder, std::span<const std::string> texts);

/// Validated rerank: non-empty docs, one finite score per document, sorted by input index.
[[nodiscard]] std::vector<RerankResult> rerank_docs(Reranker& reranker, std::string_view query,
                                                    std::span<const std::string> docs);

/// Sends `prompt` with the image attached. Rejects undecodable images before
/// any provider call.
[[nodiscard]] std::string caption_image(ChatClient& captioner, std::span<const std::uint8_t> image,
                                        std::string_view prompt);

}  // namespace taxorag

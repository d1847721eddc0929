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

#include "taxorag/providers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "taxorag/errors.hpp"
#include "taxorag/image.hpp"
#include "taxorag/text.hpp"

namespace taxorag {

void ProviderConfig::validate(std::string_view stage) const {
    if (kind != "mock" && kind != "http") {
        throw ConfigError(fmt::format("{}: provider kind must be 'mock' or 'http', got '{}'", stage, kind));
    }
    if (!(timeout_s > 0.0)) throw ConfigError(fmt::format("{}: timeout must be positive", stage));
    if (max_retries < 0) throw ConfigError(fmt::format("{}: max_retries must be >= 0", stage));
    if (max_concurrent_requests < 1) throw ConfigError(fmt::format("{}: max_concurrent_requests must be >= 1", stage));
    if (is_mock()) return;
    if (base_url.empty()) throw ConfigError(fmt::format("{}: base_url is required", stage));
    if (model.empty()) throw ConfigError(fmt::format("{}: model is required", stage));
    if (api_key_env.empty()) throw ConfigError(fmt::format("{}: api_key_env is required", stage));
    const char* key = std::getenv(api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError(fmt::format("{}: environment variable {} is not set", stage, api_key_env));
    }
}

std::string ProviderConfig::id() const { return is_mock() ? std::string("mock") : base_url + "|" + model; }

std::string_view to_string(ChatPurpose p) noexcept {
    switch (p) {
        case ChatPurpose::generic: return "generic";
        case ChatPurpose::filter_chunk: return "filter_chunk";
        case ChatPurpose::caption: return "caption";
        case ChatPurpose::multiquery: return "multiquery";
        case ChatPurpose::respond: return "respond";
        case ChatPurpose::extract_claims: return "extract_claims";
        case ChatPurpose::judge_claim: return "judge_claim";
        case ChatPurpose::generate_questions: return "generate_questions";
    }
    return "unknown";
}

std::vector<EmbeddingVector> embed_texts(Embedder& embedder, std::span<const std::string> texts) {
    if (texts.empty()) throw InvalidInput("embed called with no texts");
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (text::trim(texts[i]).empty()) throw InvalidInput(fmt::format("embed text #{} is empty", i));
    }
    auto out = embedder.embed(texts);
    if (out.size() != texts.size()) {
        throw ProviderError(ProviderError::Kind::malformed,
                            fmt::format("embedder returned {} vectors for {} texts", out.size(), texts.size()));
    }
    for (const auto& v : out) {
        if (v.dim() != embedder.dim()) {
            throw DimensionMismatch(fmt::format("embedder returned dim {}, expected {}", v.dim(), embedder.dim()));
        }
    }
    return out;
}

std::vector<RerankResult> rerank_docs(Reranker& reranker, std::string_view query, std::span<const std::string> docs) {
    if (docs.empty()) throw InvalidInput("rerank called with no documents");
    auto out = reranker.rerank(query, docs);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    bool complete = out.size() == docs.size();
    for (std::size_t i = 0; complete && i < out.size(); ++i) {
        complete = out[i].index == i && std::isfinite(out[i].score);
    }
    if (!complete) {
        throw ProviderError(ProviderError::Kind::malformed,
                            fmt::format("reranker did not return one finite score per document ({} docs)", docs.size()));
    }
    return out;
}

std::string caption_image(ChatClient& captioner, std::span<const std::uint8_t> image, std::string_view prompt) {
    const ImageInfo info = inspect_image(image);
    ChatRequest req;
    req.purpose = ChatPurpose::caption;
    req.user = std::string(prompt);
    req.image = ImageAttachment{{image.begin(), image.end()}, std::string(mime_type(info.format))};
    auto reply = captioner.chat(req);
    if (text::trim(reply.text).empty()) {
        throw ProviderError(ProviderError::Kind::malformed, "captioner returned an empty caption");
    }
    return std::move(reply.text);
}

}  // namespace taxorag

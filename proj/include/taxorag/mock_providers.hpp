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

#include "taxorag/providers.hpp"

// Deterministic offline stand-ins for every hosted model. Each reply is a pure
// function of the request (and the configured seed), so whole pipeline runs are
// byte-reproducible.
//
// Chat replies by purpose:
//   caption            "MOCKCAP:" + first 8 hex digits of FNV-1a-64(image bytes)
//   filter_chunk       JSON verdict per mock_filter_verdict
//   multiquery         fields["n"] lines "<query> (variant i)"
//   respond            well-formed five-section reply built from the context hints
//   extract_claims     sentences of fields["answer"], one per line
//   judge_claim        "yes" iff the folded claim occurs in one of the folded contexts
//   generate_questions first fields["n"] sentences of fields["answer"], prefixed "Q: "
//   generic            "MOCKCHAT:" + hex FNV-1a-64 of system + "\x1f" + user
namespace taxorag {

struct MockFilterVerdict {
    bool useful = false;
    std::string contextual_text;
};

/// Useful unless the case-folded chunk starts with "references", "citation" or
/// "external links", or has fewer than 5 whitespace tokens. Useful chunks get
/// "ctx: <taxon_name> (<taxon_rank>)".
[[nodiscard]] MockFilterVerdict mock_filter_verdict(std::string_view chunk_text, std::string_view taxon_name,
                                                    std::string_view taxon_rank);

/// Separates individual contexts in the "context" field of judge_claim requests.
inline constexpr char kContextRecordSeparator = '\x1e';

/// True iff `claim`, case-folded and whitespace-collapsed, is a substring of
/// one of the contexts in `context` (split on kContextRecordSeparator)
/// normalized the same way.
[[nodiscard]] bool mock_claim_supported(std::string_view claim, std::string_view context);

class MockChat final : public ChatClient {
  public:
    explicit MockChat(std::uint64_t seed = 0) : seed_(seed) {}
    ChatReply chat(const ChatRequest& request) override;
    [[nodiscard]] std::string id() const override { return "mock-chat"; }

  private:
    std::uint64_t seed_;
};

/// Vector = normalize(xorshift64*(FNV-1a-64(text) ^ seed) mapped to [-1, 1)).
class MockEmbedder final : public Embedder {
  public:
    explicit MockEmbedder(std::size_t dim, std::uint64_t seed = 0);
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    [[nodiscard]] std::size_t dim() const override { return dim_; }
    [[nodiscard]] std::string id() const override { return "mock-embedder"; }

    [[nodiscard]] EmbeddingVector embed_one(std::string_view text) const;

  private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Scores each document by cosine(mock-embed(query), mock-embed(doc)).
class MockReranker final : public Reranker {
  public:
    explicit MockReranker(std::size_t dim, std::uint64_t seed = 0) : embedder_(dim, seed) {}
    std::vector<RerankResult> rerank(std::string_view query, std::span<const std::string> docs) override;
    [[nodiscard]] std::string id() const override { return "mock-reranker"; }

  private:
    MockEmbedder embedder_;
};

}  // namespace taxorag

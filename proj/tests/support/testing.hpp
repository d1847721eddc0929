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
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "taxorag/chunk.hpp"
#include "taxorag/embedding.hpp"
#include "taxorag/eval.hpp"
#include "taxorag/http_providers.hpp"
#include "taxorag/providers.hpp"
#include "taxorag/vectorstore.hpp"

namespace taxorag::testing {

std::filesystem::path fixtures_dir();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir();

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& content);

Chunk make_chunk(const std::string& id, const std::string& text, Source source = Source::wikipedia,
                 TaxonRank rank = Rank::genus, const std::string& taxon = "Argiope");

/// Result whose truth and prediction differ only at Order; Phylum and Class
/// are fixed. A missing prediction abstains at Order.
ClassificationResult order_result(const std::string& id, const std::string& truth,
                                  const std::optional<std::string>& pred);

/// Unit vector from explicit components (normalized on the way in).
EmbeddingVector vec(std::initializer_list<double> raw);

/// Gaussian direction, normalized.
EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim);

/// A random store plus the same contents in oracle form. Roughly a tenth of the
/// items reuse an earlier vector so score ties are common; ids are random so
/// insertion order differs from id order. Sources alternate at random.
struct RandomStore {
    VectorStore store;
    std::vector<oracle::Item> items;
};
RandomStore random_store(std::mt19937_64& rng, std::size_t n, std::size_t dim);

/// Chat client answering from a queue of scripted replies (or a function), and
/// recording every request.
class ScriptedChat final : public ChatClient {
  public:
    using Handler = std::function<std::string(const ChatRequest&)>;

    explicit ScriptedChat(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}
    explicit ScriptedChat(Handler handler) : handler_(std::move(handler)) {}

    ChatReply chat(const ChatRequest& request) override;
    [[nodiscard]] std::string id() const override { return "scripted"; }

    [[nodiscard]] std::vector<ChatRequest> requests() const;

  private:
    mutable std::mutex mu_;
    std::deque<std::string> replies_;
    Handler handler_;
    std::vector<ChatRequest> requests_;
};

/// HTTP transport replaying scripted responses; an entry with status 0 raises
/// TransportError (timed out) instead.
class FakeTransport final : public HttpTransport {
  public:
    struct Call {
        std::string url;
        HttpHeaders headers;
        std::string body;
    };

    explicit FakeTransport(std::vector<HttpResponse> script) : script_(script.begin(), script.end()) {}

    HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                      std::chrono::milliseconds timeout) override;

    [[nodiscard]] std::vector<Call> calls() const;

  private:
    mutable std::mutex mu_;
    std::deque<HttpResponse> script_;
    std::vector<Call> calls_;
};

}  // namespace taxorag::testing

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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "taxorag/errors.hpp"
#include "taxorag/providers.hpp"

// Remote providers speaking the common chat-completions REST shape:
//   POST {base_url}/chat/completions  {model, messages}        -> choices[0].message.content
//   POST {base_url}/embeddings        {model, input}           -> data[i].embedding
//   POST {base_url}/rerank            {model, query, documents} -> results[i].{index, relevance_score}
namespace taxorag {

struct HttpResponse {
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Thrown by transports for connection-level failures (no HTTP status).
class TransportError : public Error {
  public:
    TransportError(const std::string& what, bool timed_out) : Error(what), timed_out_(timed_out) {}
    [[nodiscard]] bool timed_out() const noexcept { return timed_out_; }

  private:
    bool timed_out_;
};

class HttpTransport {
  public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                              std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport (http:// and https://).
[[nodiscard]] std::shared_ptr<HttpTransport> make_default_transport();

/// Exponential backoff: delay(n) = base * factor^n * (1 + jitter * u), u ~ U[0, 1)
/// from a seeded xorshift64* stream. With factor >= 1 + jitter the sequence is
/// nondecreasing.
class Backoff {
  public:
    Backoff(std::chrono::milliseconds base, double factor, double jitter, std::uint64_t seed);
    std::chrono::milliseconds next();

  private:
    std::chrono::milliseconds base_;
    double factor_;
    double jitter_;
    std::uint64_t state_;
    int attempt_ = 0;
};

/// Blocks while `limit` requests are in flight.
class InFlightLimiter {
  public:
    explicit InFlightLimiter(int limit) : limit_(limit) {}

    class Permit {
      public:
        explicit Permit(InFlightLimiter& l) : l_(&l) { l_->acquire(); }
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;
        ~Permit() { l_->release(); }

      private:
        InFlightLimiter* l_;
    };

    [[nodiscard]] int peak() const;

  private:
    void acquire();
    void release();

    int limit_;
    int active_ = 0;
    int peak_ = 0;
    mutable std::mutex mu_;
    std::condition_variable cv_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// JSON-over-HTTP with retries, auth header, in-flight bound and redacted debug logging.
class RestClient {
  public:
    RestClient(ProviderConfig config, std::shared_ptr<HttpTransport> transport, std::uint64_t seed = 0,
               Sleeper sleeper = {});

    /// POSTs `body` to base_url + path. Retries timeouts, connection failures,
    /// 429 and 5xx with backoff (honouring Retry-After); 401/403 fail at once.
    nlohmann::json post(const std::string& path, const nlohmann::json& body);

    [[nodiscard]] const ProviderConfig& config() const noexcept { return config_; }
    /// Total retries performed over the client's lifetime.
    [[nodiscard]] int retries() const;
    [[nodiscard]] const InFlightLimiter& limiter() const noexcept { return limiter_; }

  private:
    ProviderConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    std::string api_key_;
    Sleeper sleeper_;
    std::uint64_t seed_;
    InFlightLimiter limiter_;
    mutable std::mutex mu_;
    int retries_ = 0;
    std::uint64_t calls_ = 0;
};

class RemoteChat final : public ChatClient {
  public:
    explicit RemoteChat(std::shared_ptr<RestClient> client) : client_(std::move(client)) {}
    ChatReply chat(const ChatRequest& request) override;
    [[nodiscard]] std::string id() const override { return client_->config().id(); }

  private:
    std::shared_ptr<RestClient> client_;
};

class RemoteEmbedder final : public Embedder {
  public:
    RemoteEmbedder(std::shared_ptr<RestClient> client, std::size_t dim) : client_(std::move(client)), dim_(dim) {}
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    [[nodiscard]] std::size_t dim() const override { return dim_; }
    [[nodiscard]] std::string id() const override { return client_->config().id(); }

  private:
    std::shared_ptr<RestClient> client_;
    std::size_t dim_;
};

class RemoteReranker final : public Reranker {
  public:
    explicit RemoteReranker(std::shared_ptr<RestClient> client) : client_(std::move(client)) {}
    std::vector<RerankResult> rerank(std::string_view query, std::span<const std::string> docs) override;
    [[nodiscard]] std::string id() const override { return client_->config().id(); }

  private:
    std::shared_ptr<RestClient> client_;
};

/// Request body for a chat call (exposed for wire-format tests).
[[nodiscard]] nlohmann::json chat_request_body(const std::string& model, const ChatRequest& request);

/// Builds the provider for a stage: mock when config.kind == "mock", remote otherwise.
[[nodiscard]] std::unique_ptr<ChatClient> make_chat_client(const ProviderConfig& config, std::uint64_t seed,
                                                           std::shared_ptr<HttpTransport> transport = nullptr);
[[nodiscard]] std::unique_ptr<Embedder> make_embedder(const ProviderConfig& config, std::size_t dim,
                                                      std::uint64_t seed,
                                                      std::shared_ptr<HttpTransport> transport = nullptr);
[[nodiscard]] std::unique_ptr<Reranker> make_reranker(const ProviderConfig& config, std::size_t dim,
                                                      std::uint64_t seed,
                                                      std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace taxorag

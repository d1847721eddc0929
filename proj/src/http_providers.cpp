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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "taxorag/http_providers.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "taxorag/hashing.hpp"
#include "taxorag/mock_providers.hpp"

namespace taxorag {

namespace {

using nlohmann::json;

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix path, no trailing '/'
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError(fmt::format("base_url '{}' has no scheme", url));
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? std::string() : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

class HttplibTransport final : public HttpTransport {
  public:
    HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                      std::chrono::milliseconds timeout) override {
        const auto parts = split_url(url);
        httplib::Client client(parts.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(parts.path.empty() ? "/" : parts.path, h, body, "application/json");
        if (!res) {
            const auto err = res.error();
            throw TransportError(fmt::format("HTTP request to {} failed: {}", parts.origin, httplib::to_string(err)),
                                 err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read);
        }
        HttpResponse out{res->status, res->body, {}};
        for (const auto& [k, v] : res->headers) out.headers.emplace(text_lower(k), v);
        return out;
    }

  private:
    static std::string text_lower(std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    }
};

std::string base64(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::optional<std::chrono::milliseconds> retry_after(const HttpResponse& r) {
    const auto it = r.headers.find("retry-after");
    if (it == r.headers.end()) return std::nullopt;
    char* end = nullptr;
    const double secs = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || !(secs >= 0.0) || !std::isfinite(secs)) return std::nullopt;
    return std::chrono::milliseconds(static_cast<std::int64_t>(secs * 1000.0));
}

std::string redact(std::string s, const std::string& secret) {
    if (secret.empty()) return s;
    for (auto pos = s.find(secret); pos != std::string::npos; pos = s.find(secret, pos)) s.replace(pos, secret.size(), "***");
    return s;
}

std::string content_text(const json& content) {
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
        std::string out;
        for (const auto& part : content) {
            if (part.is_object() && part.value("type", "") == "text" && part.contains("text")) {
                out += part.at("text").get<std::string>();
            }
        }
        return out;
    }
    throw ProviderError(ProviderError::Kind::malformed, "chat reply content is neither text nor parts");
}

}  // namespace

std::shared_ptr<HttpTransport> make_default_transport() { return std::make_shared<HttplibTransport>(); }

Backoff::Backoff(std::chrono::milliseconds base, double factor, double jitter, std::uint64_t seed)
    : base_(base), factor_(factor), jitter_(jitter), state_(seed) {}

std::chrono::milliseconds Backoff::next() {
    Xorshift64Star rng(state_);
    const double u = rng.next_unit();
    state_ = rng.next();
    const double nominal = static_cast<double>(base_.count()) * std::pow(factor_, attempt_++);
    return std::chrono::milliseconds(static_cast<std::int64_t>(nominal * (1.0 + jitter_ * u)));
}

void InFlightLimiter::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return active_ < limit_; });
    ++active_;
    peak_ = std::max(peak_, active_);
}

void InFlightLimiter::release() {
    {
        std::lock_guard lock(mu_);
        --active_;
    }
    cv_.notify_one();
}

int InFlightLimiter::peak() const {
    std::lock_guard lock(mu_);
    return peak_;
}

RestClient::RestClient(ProviderConfig config, std::shared_ptr<HttpTransport> transport, std::uint64_t seed,
                       Sleeper sleeper)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_default_transport()),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      seed_(seed),
      limiter_(config_.max_concurrent_requests) {
    config_.validate("provider");
    api_key_ = std::getenv(config_.api_key_env.c_str());
}

int RestClient::retries() const {
    std::lock_guard lock(mu_);
    return retries_;
}

json RestClient::post(const std::string& path, const json& body) {
    const std::string url = [&] {
        std::string base = config_.base_url;
        while (!base.empty() && base.back() == '/') base.pop_back();
        return base + path;
    }();
    const std::string payload = body.dump();
    const HttpHeaders headers = {{"Authorization", "Bearer " + api_key_}, {"Content-Type", "application/json"}};
    const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(config_.timeout_s * 1000.0));

    std::uint64_t call_no = 0;
    {
        std::lock_guard lock(mu_);
        call_no = calls_++;
    }
    Backoff backoff(std::chrono::milliseconds(1000), 2.0, 0.1, seed_ ^ fnv1a64(path) ^ (call_no * kFnvPrime));

    spdlog::debug("POST {} (Authorization: Bearer ***) body={}", url, redact(payload, api_key_));
    for (int attempt = 0;; ++attempt) {
        std::string failure;
        ProviderError::Kind kind = ProviderError::Kind::transient;
        std::optional<std::chrono::milliseconds> server_delay;
        try {
            InFlightLimiter::Permit permit(limiter_);
            const HttpResponse res = transport_->post(url, headers, payload, timeout);
            spdlog::debug("{} -> {} body={}", url, res.status, redact(res.body, api_key_));
            if (res.status >= 200 && res.status < 300) {
                try {
                    return json::parse(res.body);
                } catch (const json::exception& e) {
                    throw ProviderError(ProviderError::Kind::malformed,
                                        fmt::format("{} returned invalid JSON: {}", url, e.what()));
                }
            }
            if (res.status == 401 || res.status == 403) {
                throw ProviderError(ProviderError::Kind::auth, fmt::format("{} rejected credentials ({})", url, res.status));
            }
            if (res.status != 429 && res.status < 500) {
                throw ProviderError(ProviderError::Kind::rejected, fmt::format("{} returned HTTP {}", url, res.status));
            }
            failure = fmt::format("HTTP {}", res.status);
            server_delay = retry_after(res);
        } catch (const TransportError& e) {
            failure = e.what();
            kind = e.timed_out() ? ProviderError::Kind::timeout : ProviderError::Kind::transient;
        }

        if (attempt >= config_.max_retries) {
            throw ProviderError(kind, fmt::format("{} failed after {} attempts: {}", url, attempt + 1, failure));
        }
        auto delay = backoff.next();
        if (server_delay && *server_delay > delay) delay = *server_delay;
        spdlog::warn("{}: {}; retrying in {} ms", url, failure, delay.count());
        {
            std::lock_guard lock(mu_);
            ++retries_;
        }
        sleeper_(delay);
    }
}

json chat_request_body(const std::string& model, const ChatRequest& request) {
    json messages = json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    if (request.image) {
        const std::string url = "data:" + request.image->mime_type + ";base64," + base64(request.image->bytes);
        messages.push_back({{"role", "user"},
                            {"content", json::array({{{"type", "text"}, {"text", request.user}},
                                                     {{"type", "image_url"}, {"image_url", {{"url", url}}}}})}});
    } else {
        messages.push_back({{"role", "user"}, {"content", request.user}});
    }
    return {{"model", model}, {"messages", messages}};
}

ChatReply RemoteChat::chat(const ChatRequest& request) {
    const json res = client_->post("/chat/completions", chat_request_body(client_->config().model, request));
    ChatReply reply;
    try {
        reply.text = content_text(res.at("choices").at(0).at("message").at("content"));
        if (res.contains("usage") && res["usage"].is_object()) {
            reply.usage = TokenUsage{res["usage"].value("prompt_tokens", std::int64_t{0}),
                                     res["usage"].value("completion_tokens", std::int64_t{0})};
        }
    } catch (const json::exception& e) {
        throw ProviderError(ProviderError::Kind::malformed, fmt::format("unexpected chat reply shape: {}", e.what()));
    }
    if (reply.text.empty()) throw ProviderError(ProviderError::Kind::malformed, "chat reply is empty");
    return reply;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts) {
    const json res = client_->post("/embeddings", {{"model", client_->config().model}, {"input", texts}});
    std::vector<std::pair<std::size_t, std::vector<double>>> rows;
    try {
        for (const auto& item : res.at("data")) {
            rows.emplace_back(item.at("index").get<std::size_t>(), item.at("embedding").get<std::vector<double>>());
        }
    } catch (const json::exception& e) {
        throw ProviderError(ProviderError::Kind::malformed, fmt::format("unexpected embedding reply shape: {}", e.what()));
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<EmbeddingVector> out;
    out.reserve(rows.size());
    for (const auto& [index, values] : rows) {
        if (values.size() != dim_) {
            throw DimensionMismatch(fmt::format("embedding #{} has dim {}, expected {}", index, values.size(), dim_));
        }
        out.push_back(normalize(std::span<const double>(values)));
    }
    return out;
}

std::vector<RerankResult> RemoteReranker::rerank(std::string_view query, std::span<const std::string> docs) {
    const json body = {{"model", client_->config().model},
                       {"query", std::string(query)},
                       {"documents", docs},
                       {"top_n", docs.size()}};
    const json res = client_->post("/rerank", body);
    std::vector<RerankResult> out;
    try {
        for (const auto& item : res.at("results")) {
            out.push_back({item.at("index").get<std::size_t>(), item.at("relevance_score").get<double>()});
        }
    } catch (const json::exception& e) {
        throw ProviderError(ProviderError::Kind::malformed, fmt::format("unexpected rerank reply shape: {}", e.what()));
    }
    return out;
}

std::unique_ptr<ChatClient> make_chat_client(const ProviderConfig& config, std::uint64_t seed,
                                             std::shared_ptr<HttpTransport> transport) {
    if (config.is_mock()) return std::make_unique<MockChat>(seed);
    return std::make_unique<RemoteChat>(std::make_shared<RestClient>(config, std::move(transport), seed));
}

std::unique_ptr<Embedder> make_embedder(const ProviderConfig& config, std::size_t dim, std::uint64_t seed,
                                        std::shared_ptr<HttpTransport> transport) {
    if (config.is_mock()) return std::make_unique<MockEmbedder>(dim, seed);
    return std::make_unique<RemoteEmbedder>(std::make_shared<RestClient>(config, std::move(transport), seed), dim);
}

std::unique_ptr<Reranker> make_reranker(const ProviderConfig& config, std::size_t dim, std::uint64_t seed,
                                        std::shared_ptr<HttpTransport> transport) {
    if (config.is_mock()) return std::make_unique<MockReranker>(dim, seed);
    return std::make_unique<RemoteReranker>(std::make_shared<RestClient>(config, std::move(transport), seed));
}

}  // namespace taxorag

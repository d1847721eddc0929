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

#include "taxorag/http_providers.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include "support/testing.hpp"

namespace taxorag {
namespace {

using testing::FakeTransport;
using nlohmann::json;

constexpr const char* kKeyVar = "TAXORAG_TEST_API_KEY";

ProviderConfig remote(int retries = 3) {
    ::setenv(kKeyVar, "sk-test-secret", 1);
    ProviderConfig c;
    c.kind = "http";
    c.base_url = "https://models.example/v1/";
    c.model = "test-model";
    c.api_key_env = kKeyVar;
    c.max_retries = retries;
    return c;
}

HttpResponse ok(const json& body) { return {200, body.dump(), {}}; }

json chat_body(const std::string& text) { return {{"choices", {{{"message", {{"content", text}}}}}}}; }

struct Recorder {
    std::vector<std::chrono::milliseconds> delays;
    Sleeper sleeper() {
        return [this](std::chrono::milliseconds d) { delays.push_back(d); };
    }
};

TEST(RestClient, SuccessSendsAuthAndModel) {
    auto transport = std::make_shared<FakeTransport>(std::vector<HttpResponse>{ok(chat_body("hi"))});
    Recorder rec;
    RemoteChat chat(std::make_shared<RestClient>(remote(), transport, 0, rec.sleeper()));
    ChatRequest req;
    req.system = "s";
    req.user = "u";
    EXPECT_EQ(chat.chat(req).text, "hi");
    const auto calls = transport->calls();
    ASSERT_EQ(calls.size(), 1u);
    EXPECT_EQ(calls[0].url, "https://models.example/v1/chat/completions");
    EXPECT_EQ(calls[0].headers.at(0).second, "Bearer sk-test-secret");
    const auto body = json::parse(calls[0].body);
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["messages"].size(), 2u);
    EXPECT_TRUE(rec.delays.empty());
}

TEST(RestClient, TransientFailureThenSuccessRecordsOneRetry) {
    auto transport = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{503, "busy", {}}, ok(chat_body("done"))});
    Recorder rec;
    auto client = std::make_shared<RestClient>(remote(), transport, 0, rec.sleeper());
    RemoteChat chat(client);
    EXPECT_EQ(chat.chat({}).text, "done");
    EXPECT_EQ(client->retries(), 1);
    ASSERT_EQ(rec.delays.size(), 1u);
    EXPECT_GE(rec.delays[0].count(), 1000);
    EXPECT_LT(rec.delays[0].count(), 1100);
}

TEST(RestClient, AuthFailureIsNotRetried) {
    auto transport = std::make_shared<FakeTransport>(std::vector<HttpResponse>{{401, "no", {}}, ok(chat_body("x"))});
    Recorder rec;
    auto client = std::make_shared<RestClient>(remote(), transport, 0, rec.sleeper());
    try {
        (void)client->post("/chat/completions", json::object());
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.kind(), ProviderError::Kind::auth);
        EXPECT_EQ(std::string(e.what()).find("sk-test-secret"), std::string::npos);
    }
    EXPECT_EQ(transport->calls().size(), 1u);
    EXPECT_EQ(client->retries(), 0);
}

TEST(RestClient, RetriesAreBoundedAndTimeoutsReported) {
    std::vector<HttpResponse> script(10, HttpResponse{0, "", {}});
    auto transport = std::make_shared<FakeTransport>(script);
    Recorder rec;
    auto client = std::make_shared<RestClient>(remote(2), transport, 0, rec.sleeper());
    try {
        (void)client->post("/embeddings", json::object());
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.kind(), ProviderError::Kind::timeout);
    }
    EXPECT_EQ(transport->calls().size(), 3u);
    EXPECT_EQ(client->retries(), 2);
    EXPECT_EQ(rec.delays.size(), 2u);
}

TEST(RestClient, RetryAfterIsHonoured) {
    auto transport = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{429, "slow down", {{"retry-after", "7"}}}, ok(json::object())});
    Recorder rec;
    auto client = std::make_shared<RestClient>(remote(), transport, 0, rec.sleeper());
    (void)client->post("/rerank", json::object());
    ASSERT_EQ(rec.delays.size(), 1u);
    EXPECT_EQ(rec.delays[0].count(), 7000);
}

TEST(RestClient, OtherClientErrorsAreRejected) {
    auto transport = std::make_shared<FakeTransport>(std::vector<HttpResponse>{{400, "bad", {}}});
    auto client = std::make_shared<RestClient>(remote(), transport, 0, [](std::chrono::milliseconds) {});
    try {
        (void)client->post("/x", json::object());
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.kind(), ProviderError::Kind::rejected);
    }
}

TEST(RestClient, InvalidJsonIsMalformed) {
    auto transport = std::make_shared<FakeTransport>(std::vector<HttpResponse>{{200, "<html>", {}}});
    auto client = std::make_shared<RestClient>(remote(), transport, 0, [](std::chrono::milliseconds) {});
    try {
        (void)client->post("/x", json::object());
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.kind(), ProviderError::Kind::malformed);
    }
}

TEST(RestClient, MissingKeyFailsBeforeAnyCall) {
    auto config = remote();
    ::unsetenv(kKeyVar);
    auto transport = std::make_shared<FakeTransport>(std::vector<HttpResponse>{});
    EXPECT_THROW(RestClient(config, transport), ConfigError);
    EXPECT_TRUE(transport->calls().empty());
}

TEST(RestClient, InFlightBoundHolds) {
    class SlowTransport final : public HttpTransport {
      public:
        HttpResponse post(const std::string&, const HttpHeaders&, const std::string&, std::chrono::milliseconds) override {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            return {200, "{}", {}};
        }
    };
    auto config = remote();
    config.max_concurrent_requests = 2;
    auto client = std::make_shared<RestClient>(config, std::make_shared<SlowTransport>());
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            for (int j = 0; j < 5; ++j) (void)client->post("/x", json::object());
        });
    }
    threads.clear();
    EXPECT_LE(client->limiter().peak(), 2);
    EXPECT_GE(client->limiter().peak(), 1);
}

TEST(Backoff, NondecreasingWithinJitterBounds) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Backoff b(std::chrono::milliseconds(1000), 2.0, 0.1, seed);
        std::int64_t prev = 0;
        for (int n = 0; n < 8; ++n) {
            const auto d = b.next().count();
            const double nominal = 1000.0 * std::pow(2.0, n);
            EXPECT_GE(static_cast<double>(d), nominal - 1);
            EXPECT_LT(static_cast<double>(d), nominal * 1.1);
            EXPECT_GE(d, prev);
            prev = d;
        }
    }
}

TEST(RemoteEmbedder, ReordersByIndexAndNormalizes) {
    const json body = {{"data", {{{"index", 1}, {"embedding", {0.0, 2.0}}}, {{"index", 0}, {"embedding", {3.0, 4.0}}}}}};
    auto transport = std::make_shared<FakeTransport>(std::vector<HttpResponse>{ok(body)});
    RemoteEmbedder e(std::make_shared<RestClient>(remote(), transport), 2);
    const auto v = e.embed(std::vector<std::string>{"a", "b"});
    ASSERT_EQ(v.size(), 2u);
    EXPECT_NEAR(v[0].values()[0], 0.6, 1e-7);
    EXPECT_NEAR(v[1].values()[1], 1.0, 1e-7);
}

TEST(RemoteEmbedder, DimensionIsChecked) {
    const json body = {{"data", {{{"index", 0}, {"embedding", {1.0, 0.0, 0.0}}}}}};
    auto transport = std::make_shared<FakeTransport>(std::vector<HttpResponse>{ok(body)});
    RemoteEmbedder e(std::make_shared<RestClient>(remote(), transport), 2);
    EXPECT_THROW((void)e.embed(std::vector<std::string>{"a"}), DimensionMismatch);
}

TEST(RemoteReranker, ParsesResults) {
    const json body = {{"results", {{{"index", 1}, {"relevance_score", 0.2}}, {{"index", 0}, {"relevance_score", 0.9}}}}};
    auto transport = std::make_shared<FakeTransport>(std::vector<HttpResponse>{ok(body)});
    RemoteReranker r(std::make_shared<RestClient>(remote(), transport));
    const auto scores = rerank_docs(r, "q", std::vector<std::string>{"x", "y"});
    EXPECT_DOUBLE_EQ(scores[0].score, 0.9);
    EXPECT_DOUBLE_EQ(scores[1].score, 0.2);
    const auto sent = json::parse(transport->calls().at(0).body);
    EXPECT_EQ(sent["query"], "q");
    EXPECT_EQ(sent["documents"].size(), 2u);
}

TEST(ChatRequestBody, ImageBecomesDataUrl) {
    ChatRequest r;
    r.user = "describe";
    r.image = ImageAttachment{{'a', 'b', 'c'}, "image/png"};
    const auto body = chat_request_body("m", r);
    const auto& content = body["messages"][0]["content"];
    EXPECT_EQ(content[0]["text"], "describe");
    EXPECT_EQ(content[1]["image_url"]["url"], "data:image/png;base64,YWJj");
}

TEST(Factories, MockKindNeedsNoNetwork) {
    const ProviderConfig mock;
    EXPECT_EQ(make_chat_client(mock, 0)->id(), "mock-chat");
    EXPECT_EQ(make_embedder(mock, 8, 0)->dim(), 8u);
    EXPECT_EQ(make_reranker(mock, 8, 0)->id(), "mock-reranker");
}

}  // namespace
}  // namespace taxorag

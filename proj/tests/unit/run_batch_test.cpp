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

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <set>

#include "support/testing.hpp"
#include "taxorag/errors.hpp"
#include "taxorag/mock_providers.hpp"
#include "taxorag/pipeline.hpp"

namespace taxorag {
namespace {

using nlohmann::json;

std::vector<std::string> ids(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("s" + std::to_string(i));
    return out;
}

struct Counting {
    std::mutex mu;
    std::multiset<std::size_t> seen;
    std::function<json(std::size_t)> fn(const std::vector<std::string>& sample_ids, std::size_t fail_at = SIZE_MAX) {
        return [this, sample_ids, fail_at](std::size_t i) {
            {
                std::lock_guard lock(mu);
                seen.insert(i);
            }
            json j = {{"sample_id", sample_ids[i]}, {"value", i * i}};
            if (i == fail_at) j["error"] = "boom";
            return j;
        };
    }
};

bool no_error(const json& j) { return !j.contains("error"); }

BatchSpec spec_for(const std::filesystem::path& out, std::size_t n, Counting& c, std::size_t fail_at = SIZE_MAX) {
    BatchSpec s;
    s.out = out;
    s.sample_ids = ids(n);
    s.process = c.fn(s.sample_ids, fail_at);
    s.is_ok = no_error;
    s.identity = {{"variant", "simple-rag"}, {"config", "abc"}};
    return s;
}

TEST(RunBatch, WritesOneRecordPerSampleInOrder) {
    testing::TempDir dir;
    Counting c;
    auto s = spec_for(dir / "out.jsonl", 5, c);
    s.workers = 4;
    const auto o = run_batch(s);
    EXPECT_EQ(o.total, 5u);
    EXPECT_EQ(o.ok, 5u);
    EXPECT_FALSE(o.interrupted);
    EXPECT_EQ(testing::read_text(dir / "out.jsonl"),
              "{\"sample_id\":\"s0\",\"value\":0}\n{\"sample_id\":\"s1\",\"value\":1}\n"
              "{\"sample_id\":\"s2\",\"value\":4}\n{\"sample_id\":\"s3\",\"value\":9}\n"
              "{\"sample_id\":\"s4\",\"value\":16}\n");
    EXPECT_FALSE(std::filesystem::exists(dir / "out.jsonl.partial"));
    const auto manifest = json::parse(testing::read_text(manifest_path(dir / "out.jsonl")));
    EXPECT_EQ(manifest["identity"], s.identity);
    EXPECT_TRUE(manifest["complete"].get<bool>());
}

TEST(RunBatch, RerunIsByteIdentical) {
    testing::TempDir dir;
    Counting a;
    Counting b;
    (void)run_batch(spec_for(dir / "a.jsonl", 5, a));
    auto second = spec_for(dir / "b.jsonl", 5, b);
    second.workers = 3;
    (void)run_batch(second);
    EXPECT_EQ(testing::read_text(dir / "a.jsonl"), testing::read_text(dir / "b.jsonl"));
}

TEST(RunBatch, InterruptedRunResumesRemainingOnly) {
    testing::TempDir dir;
    std::atomic<bool> stop = false;
    Counting first;
    auto s = spec_for(dir / "out.jsonl", 5, first);
    auto inner = s.process;
    s.process = [&, inner](std::size_t i) {
        auto j = inner(i);
        if (i == 2) stop = true;
        return j;
    };
    s.stop = &stop;
    const auto o = run_batch(s);
    EXPECT_TRUE(o.interrupted);
    EXPECT_EQ(o.ok, 3u);
    EXPECT_EQ(o.pending, 2u);

    Counting second;
    auto r = spec_for(dir / "out.jsonl", 5, second);
    r.resume = true;
    const auto o2 = run_batch(r);
    EXPECT_EQ(o2.skipped, 3u);
    EXPECT_EQ(o2.ok, 5u);
    EXPECT_EQ(second.seen, (std::multiset<std::size_t>{3, 4}));

    Counting fresh;
    (void)run_batch(spec_for(dir / "fresh.jsonl", 5, fresh));
    EXPECT_EQ(testing::read_text(dir / "out.jsonl"), testing::read_text(dir / "fresh.jsonl"));
}

TEST(RunBatch, ErrorRecordsAreRetriedOnResume) {
    testing::TempDir dir;
    Counting first;
    const auto o = run_batch(spec_for(dir / "out.jsonl", 5, first, 3));
    EXPECT_EQ(o.ok, 4u);
    EXPECT_EQ(o.errors, 1u);
    Counting second;
    auto r = spec_for(dir / "out.jsonl", 5, second);
    r.resume = true;
    EXPECT_EQ(run_batch(r).ok, 5u);
    EXPECT_EQ(second.seen, (std::multiset<std::size_t>{3}));
}

TEST(RunBatch, RefusesResumeUnderDifferentIdentity) {
    testing::TempDir dir;
    Counting c;
    (void)run_batch(spec_for(dir / "out.jsonl", 3, c));
    const auto before = testing::read_text(dir / "out.jsonl");
    auto r = spec_for(dir / "out.jsonl", 3, c);
    r.resume = true;
    r.identity["variant"] = "advanced-rag";
    EXPECT_THROW((void)run_batch(r), ConfigError);
    EXPECT_EQ(testing::read_text(dir / "out.jsonl"), before);
}

TEST(RunBatch, ResumeWithoutPreviousOutputStartsFresh) {
    testing::TempDir dir;
    Counting c;
    auto s = spec_for(dir / "out.jsonl", 4, c);
    s.resume = true;
    EXPECT_EQ(run_batch(s).ok, 4u);
}

TEST(RunBatch, DuplicateIdsRejected) {
    testing::TempDir dir;
    Counting c;
    auto s = spec_for(dir / "out.jsonl", 2, c);
    s.sample_ids = {"x", "x"};
    EXPECT_THROW((void)run_batch(s), InvalidInput);
}

TEST(RunBatch, CaptionBatchIsolatesCorruptImage) {
    testing::TempDir dir;
    const auto samples = read_image_manifest(testing::fixtures_dir() / "images_with_corrupt.jsonl");
    MockChat chat;
    const auto prompt = PromptSet::builtin().caption;
    BatchSpec s;
    s.out = dir / "captions.jsonl";
    for (const auto& sm : samples) s.sample_ids.push_back(sm.sample_id);
    s.process = [&](std::size_t i) {
        return to_json(generate_caption(samples[i], chat, prompt, std::string(kMockTimestamp)));
    };
    s.is_ok = no_error;
    s.workers = 2;
    const auto o = run_batch(s);
    EXPECT_EQ(o.ok, 4u);
    EXPECT_EQ(o.errors, 1u);
    const auto records = read_captions(s.out);
    ASSERT_EQ(records.size(), 5u);
    EXPECT_FALSE(records[3].ok());
    EXPECT_EQ(records[4].caption, "MOCKCAP:ecb42552");
}

}  // namespace
}  // namespace taxorag

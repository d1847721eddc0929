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

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "taxorag/records.hpp"

namespace taxorag {

/// Process exit codes shared by every command.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitPartial = 2,
    kExitFatal = 3,
};

struct CommonOptions {
    std::filesystem::path config;
    bool resume = false;
    bool mock = false;
    bool verbose = false;
    /// Raised by the SIGINT handler; batch commands stop claiming new samples.
    const std::atomic<bool>* stop = nullptr;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
};

enum class EvalMode { classification, rag, both };

[[nodiscard]] EvalMode parse_eval_mode(std::string_view label);

/// Split, filter and contextualize a corpus into a chunk file; prints stats.
int cmd_ingest(const CommonOptions& opts, const std::filesystem::path& corpus, const std::filesystem::path& out);

/// Embed a chunk file and upsert it into the configured store.
int cmd_embed(const CommonOptions& opts, const std::filesystem::path& chunks);

/// Caption every image of a manifest.
int cmd_caption(const CommonOptions& opts, const std::filesystem::path& manifest, const std::filesystem::path& out);

/// Classify captions (or, for naive-vlm, images) with one pipeline variant.
int cmd_classify(const CommonOptions& opts, const std::filesystem::path& input, Variant variant,
                 const std::filesystem::path& out);

/// Score result files against labels and write reports under `out_dir`.
int cmd_evaluate(const CommonOptions& opts, const std::vector<std::filesystem::path>& results,
                 const std::filesystem::path& labels, EvalMode mode, const std::filesystem::path& out_dir);

/// Parses argv and dispatches to a command.
int run_cli(int argc, char** argv, const std::atomic<bool>* stop = nullptr);

}  // namespace taxorag

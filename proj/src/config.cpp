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

#include "taxorag/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

#include "taxorag/errors.hpp"
#include "taxorag/hashing.hpp"

namespace taxorag {

using nlohmann::json;

namespace {

// Typed access to one config object; rejects keys nobody asked for.
class Section {
  public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(fmt::format("{} must be an object", label()));
    }

    bool has(const char* key) {
        known_.insert(key);
        return j_.contains(key) && !j_[key].is_null();
    }

    std::string str(const char* key, std::string fallback) {
        if (!has(key)) return fallback;
        if (!j_[key].is_string()) throw ConfigError(fmt::format("{}.{} must be a string", label(), key));
        return j_[key].get<std::string>();
    }

    double num(const char* key, double fallback) {
        if (!has(key)) return fallback;
        if (!j_[key].is_number()) throw ConfigError(fmt::format("{}.{} must be a number", label(), key));
        return j_[key].get<double>();
    }

    std::uint64_t uint(const char* key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = j_[key];
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            throw ConfigError(fmt::format("{}.{} must be a non-negative integer", label(), key));
        }
        return v.get<std::uint64_t>();
    }

    Section sub(const char* key) {
        known_.insert(key);
        static const json kEmpty = json::object();
        return Section(j_.contains(key) ? j_[key] : kEmpty, path_.empty() ? key : path_ + "." + key);
    }

    const json& raw() const { return j_; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!known_.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, label()));
        }
    }

  private:
    std::string label() const { return path_.empty() ? "config" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> known_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

ProviderConfig parse_provider(Section s) {
    ProviderConfig p;
    p.kind = s.str("kind", p.kind);
    p.base_url = s.str("base_url", "");
    p.model = s.str("model", "");
    p.api_key_env = s.str("api_key_env", "");
    p.timeout_s = s.num("timeout_s", p.timeout_s);
    p.max_retries = static_cast<int>(s.num("max_retries", p.max_retries));
    p.max_concurrent_requests = static_cast<int>(s.num("max_concurrent_requests", p.max_concurrent_requests));
    s.finish();
    return p;
}

json provider_json(const ProviderConfig& p) {
    return {{"kind", p.kind},
            {"base_url", p.base_url},
            {"model", p.model},
            {"api_key_env", p.api_key_env},
            {"timeout_s", p.timeout_s},
            {"max_retries", p.max_retries},
            {"max_concurrent_requests", p.max_concurrent_requests}};
}

}  // namespace

const ProviderConfig& PipelineConfig::provider(std::string_view stage) const {
    const auto it = providers.find(stage);
    if (it == providers.end()) throw ConfigError(fmt::format("no provider configured for stage '{}'", stage));
    return it->second;
}

bool PipelineConfig::all_mock() const {
    for (const auto& [stage, p] : providers) {
        if (!p.is_mock()) return false;
    }
    return true;
}

std::string PipelineConfig::hash() const { return sha256_hex(canonical.dump()); }

PromptSet PipelineConfig::load_prompts() const { return PromptSet::load(prompts_dir, thinking_dots, prompt_files); }

PipelineConfig parse_config(const json& doc, const std::filesystem::path& base_dir, bool force_mock) {
    PipelineConfig c;
    c.base_dir = base_dir;
    Section root(doc, "");

    auto store = root.sub("store");
    const std::string store_path = store.str("path", "");
    c.store_path = resolve(base_dir, store_path);
    c.dim = store.uint("dim", c.dim);
    store.finish();
    if (c.dim < 1) throw ConfigError("store.dim must be at least 1");

    auto tok = root.sub("tokenizer");
    c.tokenizer = tok.str("kind", c.tokenizer);
    c.token_factor = tok.num("factor", c.token_factor);
    c.token_budget = tok.uint("budget", c.token_budget);
    tok.finish();
    if (c.tokenizer != "whitespace" && c.tokenizer != "scaled") {
        throw ConfigError(fmt::format("tokenizer.kind must be 'whitespace' or 'scaled', got '{}'", c.tokenizer));
    }
    if (c.token_budget < 1) throw ConfigError("tokenizer.budget must be at least 1");
    if (!(c.token_factor >= 1.0)) throw ConfigError("tokenizer.factor must be >= 1");

    auto ret = root.sub("retrieval");
    auto& r = c.retrieval;
    r.k = ret.uint("k", r.k);
    r.rerank_top = ret.uint("rerank_top", r.rerank_top);
    r.mmr.lambda = ret.num("lambda", r.mmr.lambda);
    r.mmr.fetch_k = ret.uint("fetch_k", r.mmr.fetch_k);
    r.mmr.k = ret.uint("mmr_k", r.mmr.k);
    r.n_queries = ret.uint("n_queries", r.n_queries);
    c.relevancy_questions = ret.uint("relevancy_questions", c.relevancy_questions);
    ret.finish();
    if (r.k < 1) throw ConfigError("retrieval.k must be at least 1");
    if (r.rerank_top < 1 || r.rerank_top > r.k) throw ConfigError("retrieval.rerank_top must satisfy 1 <= rerank_top <= k");
    if (!(r.mmr.lambda >= 0.0 && r.mmr.lambda <= 1.0)) throw ConfigError("retrieval.lambda must lie in [0, 1]");
    if (r.mmr.k < 1 || r.mmr.k > r.mmr.fetch_k) throw ConfigError("retrieval.mmr_k must satisfy 1 <= mmr_k <= fetch_k");
    if (c.relevancy_questions < 1) throw ConfigError("retrieval.relevancy_questions must be at least 1");

    auto provs = root.sub("providers");
    json providers_canonical = json::object();
    for (const auto stage : kStages) {
        const std::string key(stage);
        ProviderConfig p = provs.has(key.c_str()) ? parse_provider(provs.sub(key.c_str())) : ProviderConfig{};
        if (force_mock) p.kind = "mock";
        if (p.kind != "mock" && p.kind != "http") {
            throw ConfigError(fmt::format("{}: provider kind must be 'mock' or 'http', got '{}'", stage, p.kind));
        }
        providers_canonical[key] = provider_json(p);
        c.providers.emplace(key, std::move(p));
    }
    provs.finish();

    auto pr = root.sub("prompts");
    const std::string prompts_dir = pr.str("dir", "");
    c.prompts_dir = resolve(base_dir, prompts_dir);
    c.thinking_dots = pr.uint("thinking_dots", c.thinking_dots);
    json files_canonical = json::object();
    if (pr.has("files")) {
        const json& files = pr.raw()["files"];
        if (!files.is_object()) throw ConfigError("prompts.files must be an object");
        static const std::set<std::string> kNames = {"contextualize", "caption",  "respond",  "multiquery",
                                                     "claims",        "verdict", "questions"};
        for (const auto& [name, value] : files.items()) {
            if (!kNames.contains(name)) throw ConfigError(fmt::format("prompts.files: unknown template '{}'", name));
            if (!value.is_string()) throw ConfigError(fmt::format("prompts.files.{} must be a string", name));
            c.prompt_files[name] = resolve(base_dir, value.get<std::string>());
            files_canonical[name] = value;
        }
    }
    pr.finish();
    if (!c.prompts_dir.empty() && !std::filesystem::is_directory(c.prompts_dir)) {
        throw ConfigError(fmt::format("prompts.dir {} does not exist", c.prompts_dir.string()));
    }
    for (const auto& [name, path] : c.prompt_files) {
        if (!std::filesystem::is_regular_file(path)) {
            throw ConfigError(fmt::format("prompt file for '{}' does not exist: {}", name, path.string()));
        }
    }

    c.max_concurrent_requests = root.uint("max_concurrent_requests", c.max_concurrent_requests);
    c.seed = root.uint("seed", c.seed);
    root.finish();
    if (c.max_concurrent_requests < 1) throw ConfigError("max_concurrent_requests must be at least 1");

    c.canonical = {{"store", {{"path", store_path}, {"dim", c.dim}}},
                   {"tokenizer", {{"kind", c.tokenizer}, {"factor", c.token_factor}, {"budget", c.token_budget}}},
                   {"retrieval",
                    {{"k", r.k},
                     {"rerank_top", r.rerank_top},
                     {"lambda", r.mmr.lambda},
                     {"fetch_k", r.mmr.fetch_k},
                     {"mmr_k", r.mmr.k},
                     {"n_queries", r.n_queries},
                     {"relevancy_questions", c.relevancy_questions}}},
                   {"providers", providers_canonical},
                   {"prompts", {{"dir", prompts_dir}, {"thinking_dots", c.thinking_dots}, {"files", files_canonical}}},
                   {"max_concurrent_requests", c.max_concurrent_requests},
                   {"seed", c.seed}};
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path, bool force_mock) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
    const json doc = json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw ConfigError(fmt::format("config {} is not valid JSON", path.string()));
    return parse_config(doc, path.parent_path(), force_mock);
}

}  // namespace taxorag

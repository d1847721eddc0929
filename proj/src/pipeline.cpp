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

#include "taxorag/pipeline.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <unordered_set>

#include "taxorag/errors.hpp"
#include "taxorag/image.hpp"
#include "taxorag/parallel.hpp"
#include "taxorag/text.hpp"

namespace taxorag {

using nlohmann::json;

namespace {

constexpr std::string_view kNaiveVlmImageNote = "The organism is shown in the attached image.";

constexpr std::string_view kRespondRepair =
    "\n\nYour previous reply did not follow the required format. Reply again with exactly the five tagged "
    "sections <classification>, <shared_traits>, <unique_traits>, <confidence> and <biodiversity>, and give "
    "the classification as \"Rank: Name\" lines.";

constexpr std::array<std::string_view, 5> kSectionTags = {"classification", "shared_traits", "unique_traits",
                                                         "confidence", "biodiversity"};

// Lower-case ASCII copy for tag search; byte offsets are preserved.
std::string lowered(std::string_view s) { return text::ascii_lower(s); }

std::optional<std::string> section(std::string_view raw, const std::string& low, std::string_view tag) {
    const std::string open = fmt::format("<{}>", tag);
    const std::string close = fmt::format("</{}>", tag);
    const auto b = low.find(open);
    if (b == std::string::npos) return std::nullopt;
    const auto body = b + open.size();
    const auto e = low.find(close, body);
    if (e == std::string::npos) return std::nullopt;
    return std::string(text::trim(raw.substr(body, e - body)));
}

// Removes list markers ("-", "*", "•", "1.", "2)") and markdown emphasis.
std::string clean_line(std::string_view line) {
    std::string s;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '*' || line[i] == '_' || line[i] == '`') continue;
        s += line[i];
    }
    std::string_view v = text::trim(s);
    if (v.starts_with("\xE2\x80\xA2")) {
        v.remove_prefix(3);
    } else if (!v.empty() && (v.front() == '-' || v.front() == '+')) {
        v.remove_prefix(1);
    } else {
        std::size_t d = 0;
        while (d < v.size() && v[d] >= '0' && v[d] <= '9') ++d;
        if (d > 0 && d < v.size() && (v[d] == '.' || v[d] == ')')) v.remove_prefix(d + 1);
    }
    return std::string(text::trim(v));
}

bool is_placeholder(std::string_view name) {
    static const std::set<std::string> kPlaceholders = {
        "",        "none", "unknown", "n/a", "na",  "-",          "--",        "---", "abstain",
        "abstained", "not confident", "uncertain", "null", "?", "not provided", "not determined"};
    std::string key = text::ascii_lower(text::trim(name));
    while (!key.empty() && (key.back() == '.' || key.back() == ',')) key.pop_back();
    if (key.size() >= 2 && key.front() == '(' && key.back() == ')') key = key.substr(1, key.size() - 2);
    return kPlaceholders.contains(std::string(text::trim(key)));
}

std::map<Rank, std::string> parse_classification_lines(std::string_view body) {
    std::map<Rank, std::string> raw;
    for (const auto line : text::lines(body)) {
        const std::string cleaned = clean_line(line);
        const auto colon = cleaned.find(':');
        if (colon == std::string::npos) continue;
        const auto rank = try_parse_rank(text::trim(std::string_view(cleaned).substr(0, colon)));
        if (!rank) continue;
        std::string name(text::trim(std::string_view(cleaned).substr(colon + 1)));
        while (!name.empty() && (name.back() == '.' || name.back() == ',' || name.back() == ';')) name.pop_back();
        name = std::string(text::trim(name));
        if (is_placeholder(name) || raw.contains(*rank)) continue;
        raw.emplace(*rank, std::move(name));
    }
    return raw;
}

std::string first_sentence(std::string_view s) {
    auto all = text::sentences(s);
    return all.empty() ? std::string() : all.front();
}

StructuredResponse respond(ChatRequest req, ChatClient& chat) {
    const auto first = chat.chat(req);
    if (auto parsed = parse_structured_response(first.text)) return std::move(*parsed);
    req.user += kRespondRepair;
    const auto second = chat.chat(req);
    if (auto parsed = parse_structured_response(second.text)) return std::move(*parsed);
    spdlog::warn("response unparseable after repair; recording full abstention");
    StructuredResponse failed;
    failed.raw_text = second.text;
    failed.parse_failure = true;
    return failed;
}

ChatRequest respond_request(const PromptTemplate& prompt, std::string_view caption, const std::vector<ContextHit>& hits,
                            bool with_context, bool with_image) {
    ChatRequest req;
    req.purpose = ChatPurpose::respond;
    req.user = prompt.render({{"context", with_context ? render_context(hits) : std::string()},
                              {"caption", std::string(caption)},
                              {"image", with_image ? std::string(kNaiveVlmImageNote) : std::string()}});
    std::string taxa;
    std::string snippets;
    for (const auto& h : hits) {
        const auto& m = h.hit.chunk.metadata;
        if (m.taxon_rank) taxa += fmt::format("{}\t{}\n", to_string(*m.taxon_rank), m.taxon_name);
        snippets += first_sentence(h.hit.chunk.text) + "\n";
    }
    req.fields = {{"context_taxa", taxa}, {"context_snippets", snippets}, {"caption", std::string(caption)}};
    return req;
}

void require_caption(std::string_view caption) {
    if (text::trim(caption).empty()) throw InvalidInput("caption is empty");
}

}  // namespace

std::string utc_timestamp() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

CaptionRecord generate_caption(const ImageSample& sample, ChatClient& captioner, const PromptTemplate& prompt,
                               const std::string& timestamp) {
    CaptionRecord r;
    r.sample_id = sample.sample_id;
    r.image = sample.image;
    try {
        const auto bytes = read_file_bytes(sample.path);
        r.caption = caption_image(captioner, bytes, prompt.render({}));
        r.captioner = captioner.id();
        r.timestamp = timestamp;
    } catch (const std::exception& e) {
        r.caption.clear();
        r.error = fmt::format("{}: {}", sample.sample_id, e.what());
    }
    return r;
}

RetrievalContext retrieve_simple(std::string_view caption, const VectorStore& store, Embedder& embedder,
                                 std::size_t k) {
    require_caption(caption);
    RetrievalContext ctx;
    ctx.variant = Variant::simple_rag;
    if (store.size() == 0) {
        ctx.flags.emplace_back("empty-store");
        return ctx;
    }
    const std::vector<std::string> texts{std::string(caption)};
    const auto q = embed_texts(embedder, texts);
    for (auto& h : store.search_topk(q.front(), k)) ctx.hits.push_back({std::move(h), 0});
    return ctx;
}

std::vector<std::string> parse_queries(std::string_view reply, std::string_view original, std::size_t n) {
    std::vector<std::string> out;
    std::set<std::string> seen{text::collapse_whitespace(original)};
    for (const auto line : text::lines(reply)) {
        if (out.size() >= n) break;
        std::string q = text::collapse_whitespace(clean_line(line));
        if (q.empty() || !seen.insert(q).second) continue;
        out.push_back(std::move(q));
    }
    return out;
}

RetrievalContext retrieve_advanced(std::string_view caption, const VectorStore& store, Embedder& embedder,
                                   ChatClient& multiquery, Reranker& reranker, const PromptTemplate& multiquery_prompt,
                                   const RetrievalParams& params) {
    require_caption(caption);
    RetrievalContext ctx;
    ctx.variant = Variant::advanced_rag;
    if (store.size() == 0) {
        ctx.flags.emplace_back("empty-store");
        return ctx;
    }

    std::vector<std::string> queries{std::string(caption)};
    if (params.n_queries > 0) {
        try {
            ChatRequest req;
            req.purpose = ChatPurpose::multiquery;
            const std::string n = std::to_string(params.n_queries);
            req.user = multiquery_prompt.render({{"n", n}, {"query", std::string(caption)}});
            req.fields = {{"query", std::string(caption)}, {"n", n}};
            auto alts = parse_queries(multiquery.chat(req).text, caption, params.n_queries);
            if (alts.empty()) throw ParseError("multiquery reply held no usable queries");
            for (auto& q : alts) queries.push_back(std::move(q));
        } catch (const std::exception& e) {
            spdlog::warn("multiquery generation failed, using the caption only: {}", e.what());
            ctx.flags.emplace_back("multiquery-fallback");
        }
    }

    const auto qvecs = embed_texts(embedder, queries);
    std::vector<ContextHit> pool;
    std::unordered_set<std::string> seen;
    for (std::size_t qi = 0; qi < qvecs.size(); ++qi) {
        for (auto& h : store.search_mmr(qvecs[qi], params.mmr)) {
            if (seen.insert(h.chunk_id).second) pool.push_back({std::move(h), qi});
        }
    }
    if (pool.empty()) return ctx;

    std::vector<std::string> docs;
    docs.reserve(pool.size());
    for (const auto& p : pool) docs.push_back(embedded_text(p.hit.chunk));
    const auto scores = rerank_docs(reranker, caption, docs);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i].hit.score = scores[i].score;
    std::stable_sort(pool.begin(), pool.end(), [](const ContextHit& a, const ContextHit& b) {
        if (a.hit.score != b.hit.score) return a.hit.score > b.hit.score;
        return a.hit.chunk_id < b.hit.chunk_id;
    });
    if (pool.size() > params.rerank_top) pool.resize(params.rerank_top);
    ctx.hits = std::move(pool);
    return ctx;
}

std::string render_context(const std::vector<ContextHit>& hits) {
    std::string out;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto& c = hits[i].hit.chunk;
        if (i > 0) out += "\n\n";
        out += fmt::format("[{}] taxon: {} | rank: {} | source: {}\n{}", i + 1, c.metadata.taxon_name,
                           to_string(c.metadata.taxon_rank), to_string(c.metadata.source), embedded_text(c));
    }
    return out;
}

std::optional<StructuredResponse> parse_structured_response(std::string_view raw) {
    const std::string low = lowered(raw);
    std::array<std::string, 5> parts;
    for (std::size_t i = 0; i < kSectionTags.size(); ++i) {
        auto s = section(raw, low, kSectionTags[i]);
        if (!s) return std::nullopt;
        parts[i] = std::move(*s);
    }
    auto repaired = enforce_prefix(parse_classification_lines(parts[0]));
    StructuredResponse r;
    r.classification = std::move(repaired.classification);
    r.dropped = std::move(repaired.dropped);
    r.shared_traits = std::move(parts[1]);
    r.unique_traits = std::move(parts[2]);
    r.confidence_commentary = std::move(parts[3]);
    r.biodiversity_knowledge = std::move(parts[4]);
    r.raw_text = std::string(raw);
    return r;
}

StructuredResponse generate_response(std::string_view caption, const RetrievalContext& context, ChatClient& chat,
                                     const PromptTemplate& prompt) {
    require_caption(caption);
    return respond(respond_request(prompt, caption, context.hits, true, false), chat);
}

StructuredResponse classify_naive_llm(std::string_view caption, ChatClient& chat, const PromptTemplate& prompt) {
    require_caption(caption);
    return respond(respond_request(prompt, caption, {}, false, false), chat);
}

StructuredResponse classify_naive_vlm(std::span<const std::uint8_t> image, ChatClient& vision,
                                      const PromptTemplate& prompt) {
    const ImageInfo info = inspect_image(image);
    auto req = respond_request(prompt, "", {}, false, true);
    req.image = ImageAttachment{{image.begin(), image.end()}, std::string(mime_type(info.format))};
    return respond(std::move(req), vision);
}

ResultRecord classify_sample(const PipelineContext& ctx, Variant variant, const ClassifyInput& input) {
    ResultRecord r;
    r.sample_id = input.sample_id;
    r.variant = variant;
    try {
        if (input.upstream_error) throw InvalidInput(fmt::format("caption unavailable: {}", *input.upstream_error));
        if (variant != Variant::naive_vlm) {
            if (!input.caption) throw InvalidInput("no caption for sample");
            r.caption = *input.caption;
        }
        std::optional<RetrievalContext> retrieved;
        switch (variant) {
            case Variant::simple_rag:
                if (ctx.store == nullptr) throw ConfigError("simple-rag needs a vector store");
                retrieved = retrieve_simple(*input.caption, *ctx.store, *ctx.embedder, ctx.retrieval.k);
                if (retrieved->hits.size() != std::min(ctx.retrieval.k, ctx.store->size())) {
                    throw Error("simple context size differs from min(k, store size)");
                }
                r.response = generate_response(*input.caption, *retrieved, *ctx.responder, ctx.prompts->respond);
                break;
            case Variant::advanced_rag:
                if (ctx.store == nullptr) throw ConfigError("advanced-rag needs a vector store");
                retrieved = retrieve_advanced(*input.caption, *ctx.store, *ctx.embedder, *ctx.multiquery,
                                              *ctx.reranker, ctx.prompts->multiquery, ctx.retrieval);
                if (retrieved->hits.size() > ctx.retrieval.rerank_top) throw Error("advanced context exceeds rerank_top");
                r.response = generate_response(*input.caption, *retrieved, *ctx.responder, ctx.prompts->respond);
                break;
            case Variant::naive_llm:
                r.response = classify_naive_llm(*input.caption, *ctx.responder, ctx.prompts->respond);
                break;
            case Variant::naive_vlm: {
                if (!input.image) throw InvalidInput("no image for sample");
                const auto bytes = read_file_bytes(*input.image);
                r.response = classify_naive_vlm(bytes, *ctx.vision, ctx.prompts->respond);
                break;
            }
        }
        if (retrieved) {
            std::unordered_set<std::string> ids;
            for (const auto& h : retrieved->hits) {
                if (!ids.insert(h.hit.chunk_id).second) throw Error("duplicate chunk in context");
                r.context.push_back({h.hit.chunk_id, h.hit.score, h.query_id});
            }
            r.flags = retrieved->flags;
        }
        if (r.response->parse_failure) r.flags.emplace_back("parse-failure");
    } catch (const std::exception& e) {
        r.context.clear();
        r.response.reset();
        r.flags.clear();
        r.error = e.what();
    }
    return r;
}

std::filesystem::path manifest_path(const std::filesystem::path& out) {
    auto p = out;
    p += ".manifest.json";
    return p;
}

BatchOutcome run_batch(const BatchSpec& spec) {
    const std::size_t n = spec.sample_ids.size();
    {
        std::unordered_set<std::string_view> ids;
        for (const auto& id : spec.sample_ids) {
            if (!ids.insert(id).second) throw InvalidInput(fmt::format("duplicate sample_id '{}'", id));
        }
    }

    const auto manifest_file = manifest_path(spec.out);
    std::map<std::string, std::string> carried;
    if (spec.resume && std::filesystem::exists(spec.out)) {
        if (!std::filesystem::exists(manifest_file)) {
            throw ConfigError(fmt::format("cannot resume {}: run manifest is missing", spec.out.string()));
        }
        std::ifstream in(manifest_file);
        const json manifest = json::parse(in, nullptr, false);
        if (manifest.is_discarded() || !manifest.contains("identity")) {
            throw ConfigError(fmt::format("cannot resume {}: unreadable manifest", spec.out.string()));
        }
        if (manifest["identity"] != spec.identity) {
            throw ConfigError(fmt::format("refusing to resume {}: configuration or variant differs from the previous run",
                                          spec.out.string()));
        }
        for_each_jsonl(spec.out, [&](const json& j, std::size_t) {
            if (spec.is_ok(j) && j.contains("sample_id") && j["sample_id"].is_string()) {
                carried[j["sample_id"].get<std::string>()] = dump_line(j);
            }
        });
    }

    BatchOutcome outcome;
    outcome.total = n;
    std::vector<std::optional<std::string>> lines(n);
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < n; ++i) {
        if (const auto it = carried.find(spec.sample_ids[i]); it != carried.end()) {
            lines[i] = it->second;
            ++outcome.skipped;
        } else {
            todo.push_back(i);
        }
    }

    if (spec.out.has_parent_path()) std::filesystem::create_directories(spec.out.parent_path());
    auto partial = spec.out;
    partial += ".partial";
    std::ofstream file(partial, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(fmt::format("cannot write {}", partial.string()));

    std::mutex mu;
    std::size_t cursor = 0;
    auto drain = [&] {
        while (cursor < n && lines[cursor]) {
            file << *lines[cursor] << '\n';
            ++cursor;
        }
        file.flush();
    };
    {
        std::lock_guard lock(mu);
        drain();
    }

    parallel_for(todo.size(), spec.workers, [&](std::size_t t) {
        const std::size_t i = todo[t];
        if (spec.stop != nullptr && spec.stop->load()) return;
        std::string line = dump_line(spec.process(i));
        std::lock_guard lock(mu);
        lines[i] = std::move(line);
        drain();
    });

    // After a stop, completed records past the first gap are kept, out of order.
    for (std::size_t i = cursor; i < n; ++i) {
        if (lines[i]) {
            file << *lines[i] << '\n';
        } else {
            ++outcome.pending;
        }
    }
    file.close();
    if (!file) throw Error(fmt::format("write failed for {}", partial.string()));
    std::filesystem::rename(partial, spec.out);
    outcome.interrupted = outcome.pending > 0;

    for (const auto& l : lines) {
        if (!l) continue;
        if (spec.is_ok(json::parse(*l))) {
            ++outcome.ok;
        } else {
            ++outcome.errors;
        }
    }

    json manifest = spec.manifest_extra;
    manifest["identity"] = spec.identity;
    manifest["counts"] = {{"total", outcome.total},     {"ok", outcome.ok},           {"errors", outcome.errors},
                          {"carried_over", outcome.skipped}, {"pending", outcome.pending}};
    manifest["complete"] = !outcome.interrupted;
    write_lines_atomic(manifest_file, {manifest.dump(2)});
    return outcome;
}

}  // namespace taxorag

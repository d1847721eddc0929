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

#include "taxorag/corpus.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <utility>

#include "json.hpp"
#include "taxorag/errors.hpp"
#include "taxorag/parallel.hpp"
#include "taxorag/text.hpp"

namespace taxorag {

namespace {

bool is_space(char c) noexcept { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

struct Span {
    std::size_t begin;
    std::size_t end;
};

enum class Level { paragraph, line, word };

// Non-blank pieces of text[s], each trimmed to its first and last non-space byte.
std::vector<Span> pieces(std::string_view text, Span s, Level level) {
    std::vector<Span> out;
    auto push_trimmed = [&](std::size_t b, std::size_t e) {
        while (b < e && is_space(text[b])) ++b;
        while (e > b && is_space(text[e - 1])) --e;
        if (b < e) out.push_back({b, e});
    };
    if (level == Level::word) {
        std::size_t i = s.begin;
        while (i < s.end) {
            while (i < s.end && is_space(text[i])) ++i;
            const std::size_t b = i;
            while (i < s.end && !is_space(text[i])) ++i;
            if (b < i) out.push_back({b, i});
        }
        return out;
    }
    // Walk lines; for paragraphs, a blank line closes the current run.
    std::size_t run_begin = s.begin;
    std::size_t i = s.begin;
    while (i < s.end) {
        std::size_t eol = text.find('\n', i);
        if (eol == std::string_view::npos || eol > s.end) eol = s.end;
        const bool blank = text::trim(text.substr(i, eol - i)).empty();
        if (level == Level::line) {
            push_trimmed(i, eol);
        } else if (blank) {
            push_trimmed(run_begin, i);
            run_begin = eol;
        }
        i = eol + 1;
    }
    if (level == Level::paragraph) push_trimmed(run_begin, s.end);
    return out;
}

class Splitter {
  public:
    Splitter(std::string_view text, std::size_t max_tokens, const TokenCounter& counter)
        : text_(text), max_(max_tokens), counter_(counter) {}

    void split(Span s, Level level) {
        const auto parts = pieces(text_, s, level);
        std::optional<Span> current;
        for (const Span& p : parts) {
            if (current) {
                const Span merged{current->begin, p.end};
                if (count(merged) <= max_) {
                    current = merged;
                    continue;
                }
                emit(*current);
                current.reset();
            }
            if (count(p) <= max_) {
                current = p;
            } else if (level == Level::word) {
                emit(p);
            } else {
                split(p, static_cast<Level>(static_cast<int>(level) + 1));
            }
        }
        if (current) emit(*current);
    }

    std::vector<Span> spans;

  private:
    std::size_t count(Span s) const { return counter_.count(text_.substr(s.begin, s.end - s.begin)); }
    void emit(Span s) { spans.push_back(s); }

    std::string_view text_;
    std::size_t max_;
    const TokenCounter& counter_;
};

// First balanced {...} object in `s`, ignoring braces inside strings.
std::optional<std::string_view> find_json_object(std::string_view s) {
    for (std::size_t start = s.find('{'); start != std::string_view::npos; start = s.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < s.size(); ++i) {
            const char c = s[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                return s.substr(start, i - start + 1);
            }
        }
    }
    return std::nullopt;
}

constexpr std::string_view kRepairInstruction =
    "\n\nYour previous reply could not be parsed. Reply with only a JSON object with the keys "
    "\"useful\" (true or false) and \"contextual_text\" (a string).";

struct DocOutcome {
    std::vector<Chunk> retained;
    std::size_t produced = 0;
    std::size_t filtered = 0;
    std::size_t oversized = 0;
    std::size_t parse_failures = 0;
    std::vector<std::string> warnings;
    std::optional<std::string> failure;
};

std::size_t count_words(std::string_view s) noexcept {
    std::size_t n = 0;
    bool in_word = false;
    for (const char c : s) {
        const bool space = is_space(c);
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

}  // namespace

std::size_t WhitespaceTokenCounter::count(std::string_view text) const { return count_words(text); }

ScaledTokenCounter::ScaledTokenCounter(double factor) : factor_(factor) {
    if (!(factor >= 1.0) || !std::isfinite(factor)) {
        throw ConfigError(fmt::format("token factor must be a finite value >= 1, got {}", factor));
    }
}

std::size_t ScaledTokenCounter::count(std::string_view text) const {
    const auto words = static_cast<double>(count_words(text));
    // Round away float noise before the ceiling so that e.g. 10 * 1.3 counts as 13.
    const double scaled = std::round(words * factor_ * 1e9) / 1e9;
    return static_cast<std::size_t>(std::ceil(scaled));
}

std::string ScaledTokenCounter::id() const { return fmt::format("scaled:{}", factor_); }

std::unique_ptr<TokenCounter> make_token_counter(std::string_view kind, double factor) {
    if (kind == "whitespace") return std::make_unique<WhitespaceTokenCounter>();
    if (kind == "scaled") return std::make_unique<ScaledTokenCounter>(factor);
    throw ConfigError(fmt::format("unknown tokenizer '{}' (expected 'whitespace' or 'scaled')", kind));
}

SplitResult split_recursive(const SourceDocument& doc, std::size_t max_tokens, const TokenCounter& counter) {
    if (max_tokens < 1) throw InvalidInput("max_tokens must be at least 1");
    Splitter splitter(doc.text, max_tokens, counter);
    splitter.split({0, doc.text.size()}, Level::paragraph);

    SplitResult out;
    const ChunkMetadata meta{doc.taxon_rank, doc.source, doc.taxon_name};
    for (const Span& s : splitter.spans) {
        Chunk c;
        c.seq = static_cast<std::uint32_t>(out.chunks.size());
        c.doc_id = doc.doc_id;
        c.chunk_id = make_chunk_id(doc.doc_id, c.seq);
        c.text = doc.text.substr(s.begin, s.end - s.begin);
        c.token_count = static_cast<std::uint32_t>(counter.count(c.text));
        c.metadata = meta;
        if (c.token_count > max_tokens) {
            out.oversized.push_back(out.chunks.size());
            out.warnings.push_back(fmt::format("{}: single token of {} tokens exceeds budget {}", c.chunk_id,
                                               c.token_count, max_tokens));
        }
        out.chunks.push_back(std::move(c));
    }
    return out;
}

std::optional<FilterDecision> parse_filter_reply(std::string_view reply) {
    while (const auto obj = find_json_object(reply)) {
        reply.remove_prefix(static_cast<std::size_t>(obj->end() - reply.begin()));
        const auto j = nlohmann::json::parse(*obj, nullptr, false);
        if (j.is_discarded() || !j.is_object()) continue;
        const auto useful = j.find("useful");
        const auto ctx = j.find("contextual_text");
        if (useful == j.end() || !useful->is_boolean() || ctx == j.end() || !ctx->is_string()) continue;
        FilterDecision d;
        d.useful = useful->get<bool>();
        d.contextual_text = std::string(text::trim(ctx->get<std::string>()));
        if (!d.useful && d.contextual_text.empty()) d.contextual_text = "not useful";
        return d;
    }
    return std::nullopt;
}

FilterDecision filter_chunk(const Chunk& chunk, const SourceDocument& doc, ChatClient& judge,
                            const PromptTemplate& prompt) {
    if (text::trim(chunk.text).empty()) return {false, "empty chunk", false};

    ChatRequest req;
    req.purpose = ChatPurpose::filter_chunk;
    req.user = prompt.render({{"doc_content", doc.text}, {"chunk_content", chunk.text}});
    req.fields = {{"chunk_content", chunk.text},
                  {"taxon_name", doc.taxon_name},
                  {"taxon_rank", to_string(doc.taxon_rank)}};

    if (auto d = parse_filter_reply(judge.chat(req).text)) return *d;
    req.user += kRepairInstruction;
    if (auto d = parse_filter_reply(judge.chat(req).text)) return *d;
    spdlog::warn("{}: filter judge reply unparseable after repair; chunk dropped", chunk.chunk_id);
    return {false, std::string(kJudgeParseFailure), true};
}

Chunk contextualize(Chunk chunk, const FilterDecision& decision, std::size_t max_tokens,
                    const TokenCounter& counter) {
    if (!decision.useful) throw InvalidInput(fmt::format("{}: cannot contextualize a rejected chunk", chunk.chunk_id));
    const std::size_t body = counter.count(chunk.text);
    const std::string_view ctx = text::trim(decision.contextual_text);
    const auto words = text::split_whitespace(ctx);

    // Longest word prefix of the context whose total stays within budget.
    auto prefix = [&](std::size_t n) {
        return n == 0 ? std::string_view() : ctx.substr(0, static_cast<std::size_t>(words[n - 1].end() - ctx.begin()));
    };
    auto total = [&](std::size_t n) { return n == 0 ? body : counter.count(prefix(n)) + 1 + body; };
    std::size_t lo = 0;
    std::size_t hi = words.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        if (total(mid) <= max_tokens) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    chunk.contextual_text = std::string(prefix(lo));
    chunk.token_count = static_cast<std::uint32_t>(total(lo));
    return chunk;
}

IngestResult ingest_corpus(std::span<const SourceDocument> docs, ChatClient& judge, const TokenCounter& counter,
                           const PromptTemplate& prompt, const IngestOptions& options) {
    if (options.max_tokens < 1) throw ConfigError("token budget must be at least 1");

    // Duplicate ids: the first occurrence wins, later ones fail.
    std::vector<bool> duplicate(docs.size(), false);
    {
        std::set<std::string_view> seen;
        for (std::size_t i = 0; i < docs.size(); ++i) duplicate[i] = !seen.insert(docs[i].doc_id).second;
    }

    std::vector<DocOutcome> outcomes(docs.size());
    parallel_for(docs.size(), options.max_concurrent_requests, [&](std::size_t i) {
        const SourceDocument& doc = docs[i];
        DocOutcome& out = outcomes[i];
        try {
            if (duplicate[i]) throw InvalidInput("duplicate doc_id");
            if (doc.doc_id.empty()) throw InvalidInput("empty doc_id");
            if (text::trim(doc.text).empty()) throw InvalidInput("empty text");
            if (text::trim(doc.taxon_name).empty()) throw InvalidInput("empty taxon_name");
            auto split = split_recursive(doc, options.max_tokens, counter);
            DocOutcome local;
            local.produced = split.chunks.size();
            local.oversized = split.oversized.size();
            local.warnings = std::move(split.warnings);
            std::size_t next_oversized = 0;
            for (std::size_t c = 0; c < split.chunks.size(); ++c) {
                if (next_oversized < split.oversized.size() && split.oversized[next_oversized] == c) {
                    ++next_oversized;
                    ++local.filtered;
                    continue;
                }
                const auto decision = filter_chunk(split.chunks[c], doc, judge, prompt);
                if (decision.parse_failure) ++local.parse_failures;
                if (!decision.useful) {
                    ++local.filtered;
                    continue;
                }
                local.retained.push_back(contextualize(std::move(split.chunks[c]), decision, options.max_tokens, counter));
            }
            out = std::move(local);
        } catch (const std::exception& e) {
            out = DocOutcome{};
            out.failure = e.what();
        }
    });

    IngestResult result;
    IngestStats& st = result.stats;
    st.documents = docs.size();
    for (std::size_t i = 0; i < docs.size(); ++i) {
        DocOutcome& o = outcomes[i];
        if (o.failure) {
            ++st.documents_failed;
            st.failures.push_back(fmt::format("{}: {}", docs[i].doc_id, *o.failure));
            spdlog::warn("document {} skipped: {}", docs[i].doc_id, *o.failure);
            continue;
        }
        st.chunks_produced += o.produced;
        st.chunks_filtered += o.filtered;
        st.chunks_retained += o.retained.size();
        st.chunks_oversized += o.oversized;
        st.judge_parse_failures += o.parse_failures;
        for (auto& w : o.warnings) st.warnings.push_back(std::move(w));
        for (auto& c : o.retained) result.chunks.push_back(std::move(c));
    }
    std::sort(result.chunks.begin(), result.chunks.end(), [](const Chunk& a, const Chunk& b) {
        return std::tie(a.doc_id, a.seq) < std::tie(b.doc_id, b.seq);
    });
    return result;
}

}  // namespace taxorag

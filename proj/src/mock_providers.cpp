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

#include "taxorag/mock_providers.hpp"

#include <fmt/format.h>

#include <map>

#include "json.hpp"
#include "taxorag/errors.hpp"
#include "taxorag/hashing.hpp"
#include "taxorag/taxonomy.hpp"
#include "taxorag/text.hpp"

namespace taxorag {

namespace {

std::string field(const ChatRequest& r, const std::string& key) {
    const auto it = r.fields.find(key);
    return it == r.fields.end() ? std::string() : it->second;
}

std::size_t field_count(const ChatRequest& r, const std::string& key, std::size_t fallback) {
    const auto v = field(r, key);
    if (v.empty()) return fallback;
    try {
        return static_cast<std::size_t>(std::stoul(v));
    } catch (const std::exception&) {
        return fallback;
    }
}

std::string first_sentence(std::string_view s) {
    auto all = text::sentences(s);
    return all.empty() ? std::string() : all.front();
}

std::string respond(const ChatRequest& r) {
    const std::string taxa_field = field(r, "context_taxa");
    const std::string snippets_field = field(r, "context_snippets");
    std::map<Rank, std::string> taxa;
    for (const auto line : text::lines(taxa_field)) {
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) continue;
        const auto rank = try_parse_rank(line.substr(0, tab));
        if (!rank || depth(*rank) < depth(Rank::klass)) continue;
        taxa.emplace(*rank, std::string(line.substr(tab + 1)));
    }
    std::vector<std::string> snippets;
    for (const auto line : text::lines(snippets_field)) {
        if (!text::trim(line).empty()) snippets.emplace_back(line);
    }
    const std::string caption = field(r, "caption");
    const std::string caption_lead = caption.empty() ? "Traits are taken from the attached image." : first_sentence(caption);

    std::string out = "<classification>\nKingdom: Animalia\nPhylum: Arthropoda\n";
    for (const auto& [rank, name] : taxa) out += fmt::format("{}: {}\n", to_string(rank), name);
    out += "</classification>\n<shared_traits>\n";
    out += snippets.empty() ? std::string("No context was provided.") : snippets.front();
    out += "\n</shared_traits>\n<unique_traits>\n" + caption_lead + "\n</unique_traits>\n<confidence>\n";
    out += fmt::format("Mock confidence note {}.", hex64(fnv1a64(caption)).substr(0, 8));
    out += "\n</confidence>\n<biodiversity>\n";
    if (snippets.empty()) {
        out += caption_lead;
    } else {
        for (std::size_t i = 0; i < snippets.size() && i < 3; ++i) {
            if (i > 0) out += ' ';
            out += snippets[i];
        }
    }
    out += "\n</biodiversity>\n";
    return out;
}

std::string join_lines(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        out += s;
        out += '\n';
    }
    return out;
}

}  // namespace

MockFilterVerdict mock_filter_verdict(std::string_view chunk_text, std::string_view taxon_name,
                                      std::string_view taxon_rank) {
    const std::string folded = text::nfc_casefold(text::trim(chunk_text));
    if (folded.starts_with("references")) return {false, "references header"};
    if (folded.starts_with("citation")) return {false, "citation"};
    if (folded.starts_with("external links")) return {false, "external links"};
    if (text::split_whitespace(chunk_text).size() < 5) return {false, "short fragment"};
    return {true, fmt::format("ctx: {} ({})", taxon_name, taxon_rank)};
}

bool mock_claim_supported(std::string_view claim, std::string_view context) {
    const std::string c = text::collapse_whitespace(text::nfc_casefold(claim));
    if (c.empty()) return false;
    std::size_t begin = 0;
    while (begin <= context.size()) {
        std::size_t end = context.find(kContextRecordSeparator, begin);
        if (end == std::string_view::npos) end = context.size();
        const auto piece = text::collapse_whitespace(text::nfc_casefold(context.substr(begin, end - begin)));
        if (piece.find(c) != std::string::npos) return true;
        begin = end + 1;
    }
    return false;
}

ChatReply MockChat::chat(const ChatRequest& r) {
    switch (r.purpose) {
        case ChatPurpose::caption: {
            if (!r.image || r.image->bytes.empty()) throw InvalidInput("mock captioner needs an image");
            return {"MOCKCAP:" + hex64(fnv1a64(r.image->bytes)).substr(0, 8), std::nullopt};
        }
        case ChatPurpose::filter_chunk: {
            const auto v = mock_filter_verdict(field(r, "chunk_content"), field(r, "taxon_name"), field(r, "taxon_rank"));
            nlohmann::json j = {{"useful", v.useful}, {"contextual_text", v.contextual_text}};
            return {j.dump(), std::nullopt};
        }
        case ChatPurpose::multiquery: {
            const std::string q = field(r, "query");
            std::vector<std::string> out;
            const std::size_t n = field_count(r, "n", 3);
            for (std::size_t i = 1; i <= n; ++i) out.push_back(fmt::format("{} (variant {})", q, i));
            return {join_lines(out), std::nullopt};
        }
        case ChatPurpose::respond:
            return {respond(r), std::nullopt};
        case ChatPurpose::extract_claims:
            return {join_lines(text::sentences(field(r, "answer"))), std::nullopt};
        case ChatPurpose::judge_claim:
            return {mock_claim_supported(field(r, "claim"), field(r, "context")) ? "yes" : "no", std::nullopt};
        case ChatPurpose::generate_questions: {
            auto s = text::sentences(field(r, "answer"));
            s.resize(std::min(s.size(), field_count(r, "n", 3)));
            for (auto& q : s) q = "Q: " + q;
            return {join_lines(s), std::nullopt};
        }
        case ChatPurpose::generic:
            break;
    }
    const std::uint64_t h = fnv1a64(r.user, fnv1a64("\x1f", fnv1a64(r.system))) ^ seed_;
    return {"MOCKCHAT:" + hex64(h), std::nullopt};
}

MockEmbedder::MockEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim == 0) throw ConfigError("mock embedder dimension must be positive");
}

EmbeddingVector MockEmbedder::embed_one(std::string_view text) const {
    Xorshift64Star rng(fnv1a64(text) ^ seed_);
    std::vector<double> raw(dim_);
    for (auto& x : raw) x = rng.next_signed_unit();
    return normalize(std::span<const double>(raw));
}

std::vector<EmbeddingVector> MockEmbedder::embed(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

std::vector<RerankResult> MockReranker::rerank(std::string_view query, std::span<const std::string> docs) {
    const auto q = embedder_.embed_one(query);
    std::vector<RerankResult> out;
    out.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) out.push_back({i, cosine(q, embedder_.embed_one(docs[i]))});
    return out;
}

}  // namespace taxorag

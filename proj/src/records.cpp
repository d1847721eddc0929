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

#include "taxorag/records.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

#include "taxorag/errors.hpp"
#include "taxorag/text.hpp"

namespace taxorag {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
    if (!j.is_object()) throw ParseError("expected a JSON object");
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError(fmt::format("missing field '{}'", key));
    return *it;
}

std::string get_string(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) throw ParseError(fmt::format("field '{}' must be a string", key));
    return v.get<std::string>();
}

std::optional<std::string> get_opt_string(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(fmt::format("field '{}' must be a string", key));
    return it->get<std::string>();
}

std::uint64_t get_uint(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ParseError(fmt::format("field '{}' must be a non-negative integer", key));
    }
    return v.get<std::uint64_t>();
}

// Converts library validation errors on a record into ParseError.
template <typename Fn>
auto as_parse_error(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const InvalidInput& e) {
        throw ParseError(e.what());
    }
}

json entries_json(const std::vector<TaxonEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries) arr.push_back({{"rank", std::string(to_string(e.rank))}, {"name", e.name}});
    return arr;
}

std::vector<TaxonEntry> entries_from_json(const json& arr) {
    if (!arr.is_array()) throw ParseError("classification must be an array");
    std::vector<TaxonEntry> out;
    for (const auto& e : arr) {
        out.push_back({as_parse_error([&] { return parse_rank(get_string(e, "rank")); }), get_string(e, "name")});
    }
    return out;
}

template <typename T, typename Fn>
std::vector<T> read_all(const std::filesystem::path& path, Fn&& convert) {
    std::vector<T> out;
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        try {
            out.push_back(convert(j));
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("{}:{}: {}", path.string(), line, e.what()));
        }
    });
    return out;
}

}  // namespace

std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::simple_rag: return "simple-rag";
        case Variant::advanced_rag: return "advanced-rag";
        case Variant::naive_llm: return "naive-llm";
        case Variant::naive_vlm: return "naive-vlm";
    }
    return "unknown";
}

Variant parse_variant(std::string_view label) {
    for (const Variant v : {Variant::simple_rag, Variant::advanced_rag, Variant::naive_llm, Variant::naive_vlm}) {
        if (label == to_string(v)) return v;
    }
    throw InvalidInput(fmt::format("unknown variant '{}'", label));
}

bool uses_store(Variant v) noexcept { return v == Variant::simple_rag || v == Variant::advanced_rag; }

json to_json(const SourceDocument& d) {
    return {{"doc_id", d.doc_id},
            {"source", std::string(to_string(d.source))},
            {"taxon_name", d.taxon_name},
            {"taxon_rank", to_string(d.taxon_rank)},
            {"text", d.text}};
}

SourceDocument document_from_json(const json& j) {
    SourceDocument d;
    d.doc_id = get_string(j, "doc_id");
    d.source = as_parse_error([&] { return parse_source(get_string(j, "source")); });
    d.taxon_name = get_string(j, "taxon_name");
    d.taxon_rank = as_parse_error([&] { return parse_taxon_rank(get_string(j, "taxon_rank")); });
    d.text = get_string(j, "text");
    return d;
}

json to_json(const Chunk& c) {
    return {{"chunk_id", c.chunk_id},
            {"doc_id", c.doc_id},
            {"seq", c.seq},
            {"text", c.text},
            {"contextual_text", c.contextual_text},
            {"token_count", c.token_count},
            {"metadata",
             {{"taxon_rank", to_string(c.metadata.taxon_rank)},
              {"source", std::string(to_string(c.metadata.source))},
              {"taxon_name", c.metadata.taxon_name}}}};
}

Chunk chunk_from_json(const json& j) {
    Chunk c;
    c.chunk_id = get_string(j, "chunk_id");
    c.doc_id = get_string(j, "doc_id");
    c.seq = static_cast<std::uint32_t>(get_uint(j, "seq"));
    c.text = get_string(j, "text");
    c.contextual_text = get_string(j, "contextual_text");
    c.token_count = static_cast<std::uint32_t>(get_uint(j, "token_count"));
    const json& m = require(j, "metadata");
    c.metadata.taxon_rank = as_parse_error([&] { return parse_taxon_rank(get_string(m, "taxon_rank")); });
    c.metadata.source = as_parse_error([&] { return parse_source(get_string(m, "source")); });
    c.metadata.taxon_name = get_string(m, "taxon_name");
    return c;
}

json to_json(const CaptionRecord& r) {
    json j = {{"sample_id", r.sample_id}, {"image", r.image}};
    if (r.error) {
        j["error"] = *r.error;
    } else {
        j["caption"] = r.caption;
        j["captioner"] = r.captioner;
        j["timestamp"] = r.timestamp;
    }
    return j;
}

CaptionRecord caption_from_json(const json& j) {
    CaptionRecord r;
    r.sample_id = get_string(j, "sample_id");
    r.image = get_opt_string(j, "image").value_or("");
    r.error = get_opt_string(j, "error");
    if (!r.error) {
        r.caption = get_string(j, "caption");
        r.captioner = get_opt_string(j, "captioner").value_or("");
        r.timestamp = get_opt_string(j, "timestamp").value_or("");
    }
    return r;
}

json to_json(const Classification& c) { return entries_json(c.entries()); }

Classification classification_from_json(const json& j) {
    return as_parse_error([&] { return Classification::from_entries(entries_from_json(j)); });
}

json to_json(const StructuredResponse& r) {
    return {{"classification", to_json(r.classification)},
            {"dropped", entries_json(r.dropped)},
            {"shared_traits", r.shared_traits},
            {"unique_traits", r.unique_traits},
            {"confidence_commentary", r.confidence_commentary},
            {"biodiversity_knowledge", r.biodiversity_knowledge},
            {"raw_text", r.raw_text},
            {"parse_failure", r.parse_failure}};
}

StructuredResponse response_from_json(const json& j) {
    StructuredResponse r;
    r.classification = classification_from_json(require(j, "classification"));
    if (const auto it = j.find("dropped"); it != j.end()) r.dropped = entries_from_json(*it);
    r.shared_traits = get_string(j, "shared_traits");
    r.unique_traits = get_string(j, "unique_traits");
    r.confidence_commentary = get_string(j, "confidence_commentary");
    r.biodiversity_knowledge = get_string(j, "biodiversity_knowledge");
    r.raw_text = get_opt_string(j, "raw_text").value_or("");
    if (const auto it = j.find("parse_failure"); it != j.end() && it->is_boolean()) r.parse_failure = it->get<bool>();
    return r;
}

json to_json(const ResultRecord& r) {
    json j = {{"sample_id", r.sample_id}, {"variant", std::string(to_string(r.variant))}};
    if (r.caption) j["caption"] = *r.caption;
    json ctx = json::array();
    for (const auto& c : r.context) ctx.push_back({{"chunk_id", c.chunk_id}, {"score", c.score}, {"query_id", c.query_id}});
    j["context"] = std::move(ctx);
    if (r.response) j["response"] = to_json(*r.response);
    j["flags"] = r.flags;
    if (r.error) j["error"] = *r.error;
    return j;
}

ResultRecord result_from_json(const json& j) {
    ResultRecord r;
    r.sample_id = get_string(j, "sample_id");
    r.variant = as_parse_error([&] { return parse_variant(get_string(j, "variant")); });
    r.caption = get_opt_string(j, "caption");
    if (const auto it = j.find("context"); it != j.end()) {
        if (!it->is_array()) throw ParseError("context must be an array");
        for (const auto& c : *it) {
            const json& score = require(c, "score");
            if (!score.is_number()) throw ParseError("context score must be a number");
            r.context.push_back({get_string(c, "chunk_id"), score.get<double>(), get_uint(c, "query_id")});
        }
    }
    if (const auto it = j.find("response"); it != j.end() && !it->is_null()) r.response = response_from_json(*it);
    if (const auto it = j.find("flags"); it != j.end()) {
        for (const auto& f : *it) {
            if (!f.is_string()) throw ParseError("flags must be strings");
            r.flags.push_back(f.get<std::string>());
        }
    }
    r.error = get_opt_string(j, "error");
    if (!r.error && !r.response) throw ParseError("result has neither response nor error");
    return r;
}

GroundTruthLabel label_from_json(const json& j) {
    const std::string id = get_string(j, "sample_id");
    const json& tax = require(j, "taxonomy");
    if (!tax.is_object()) throw ParseError("taxonomy must be an object");
    std::map<Rank, std::string> ranks;
    for (const auto& [key, value] : tax.items()) {
        const auto rank = try_parse_rank(key);
        if (!rank) throw ParseError(fmt::format("unknown rank '{}'", key));
        if (!value.is_string()) throw ParseError(fmt::format("taxonomy.{} must be a string", key));
        ranks[*rank] = value.get<std::string>();
    }
    std::optional<std::uint64_t> n_obs;
    if (const auto it = j.find("n_obs"); it != j.end() && !it->is_null()) n_obs = get_uint(j, "n_obs");
    return as_parse_error([&] { return make_ground_truth(id, ranks, n_obs); });
}

json to_json(const GroundTruthLabel& l) {
    json tax = json::object();
    for (const auto& e : l.classification.entries()) tax[std::string(to_string(e.rank))] = e.name;
    json j = {{"sample_id", l.sample_id}, {"taxonomy", std::move(tax)}};
    if (l.n_obs) j["n_obs"] = *l.n_obs;
    return j;
}

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput(fmt::format("cannot open {}", path.string()));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(fmt::format("{}:{}: malformed JSON", path.string(), n));
        fn(j, n);
    }
}

std::vector<SourceDocument> read_documents(const std::filesystem::path& path) {
    return read_all<SourceDocument>(path, document_from_json);
}

std::vector<Chunk> read_chunks(const std::filesystem::path& path) { return read_all<Chunk>(path, chunk_from_json); }

std::vector<ImageSample> read_image_manifest(const std::filesystem::path& path) {
    const auto base = path.parent_path();
    auto samples = read_all<ImageSample>(path, [&](const json& j) {
        ImageSample s{get_string(j, "sample_id"), get_string(j, "image"), {}};
        const std::filesystem::path p(s.image);
        s.path = p.is_absolute() ? p : base / p;
        return s;
    });
    std::set<std::string_view> seen;
    for (const auto& s : samples) {
        if (!seen.insert(s.sample_id).second) throw ParseError(fmt::format("duplicate sample_id '{}'", s.sample_id));
    }
    return samples;
}

std::vector<CaptionRecord> read_captions(const std::filesystem::path& path) {
    return read_all<CaptionRecord>(path, caption_from_json);
}

std::vector<ResultRecord> read_results(const std::filesystem::path& path) {
    return read_all<ResultRecord>(path, result_from_json);
}

std::vector<GroundTruthLabel> read_labels(const std::filesystem::path& path) {
    return read_all<GroundTruthLabel>(path, label_from_json);
}

void write_lines_atomic(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
        for (const auto& l : lines) out << l << '\n';
        out.flush();
        if (!out) throw Error(fmt::format("write failed for {}", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace taxorag

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

#include "taxorag/cli.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <iostream>
#include <map>
#include <mutex>
#include <set>

#include "CLI11.hpp"
#include "taxorag/config.hpp"
#include "taxorag/corpus.hpp"
#include "taxorag/errors.hpp"
#include "taxorag/eval.hpp"
#include "taxorag/http_providers.hpp"
#include "taxorag/parallel.hpp"
#include "taxorag/pipeline.hpp"
#include "taxorag/vectorstore.hpp"

namespace taxorag {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kEmbedBatch = 32;

std::ostream& out_of(const CommonOptions& o) { return o.out != nullptr ? *o.out : std::cout; }
std::ostream& err_of(const CommonOptions& o) { return o.err != nullptr ? *o.err : std::cerr; }

// Runs a command body and maps exceptions onto exit codes.
template <typename Fn>
int guarded(const CommonOptions& opts, Fn&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        fmt::print(err_of(opts), "configuration error: {}\n", e.what());
        return kExitUsage;
    } catch (const DimensionMismatch& e) {
        fmt::print(err_of(opts), "dimension mismatch: {}\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        fmt::print(err_of(opts), "error: {}\n", e.what());
        return kExitFatal;
    }
}

void require_input(const fs::path& p, std::string_view what) {
    if (!fs::is_regular_file(p)) throw ConfigError(fmt::format("{} {} does not exist", what, p.string()));
}

PipelineConfig load(const CommonOptions& opts, const std::vector<std::string_view>& stages) {
    auto cfg = load_config(opts.config, opts.mock);
    for (const auto stage : stages) cfg.provider(stage).validate(stage);
    return cfg;
}

json provider_ids(const PipelineConfig& cfg, const std::vector<std::string_view>& stages) {
    json j = json::object();
    for (const auto stage : stages) j[std::string(stage)] = cfg.provider(stage).id();
    return j;
}

VectorStore open_store(const PipelineConfig& cfg) {
    if (cfg.store_path.empty()) throw ConfigError("store.path is not configured");
    if (!fs::exists(cfg.store_path)) throw ConfigError(fmt::format("vector store {} does not exist", cfg.store_path.string()));
    auto store = VectorStore::load(cfg.store_path);
    if (store.dim() != cfg.dim) {
        throw DimensionMismatch(fmt::format("store {} has dim {}, config says {}", cfg.store_path.string(), store.dim(), cfg.dim));
    }
    return store;
}

bool record_ok(const json& j) { return !j.contains("error"); }

}  // namespace

EvalMode parse_eval_mode(std::string_view label) {
    if (label == "classification") return EvalMode::classification;
    if (label == "rag") return EvalMode::rag;
    if (label == "both") return EvalMode::both;
    throw InvalidInput(fmt::format("unknown evaluation mode '{}'", label));
}

int cmd_ingest(const CommonOptions& opts, const fs::path& corpus, const fs::path& out) {
    return guarded(opts, [&] {
        const auto cfg = load(opts, {"filter_judge"});
        require_input(corpus, "corpus");
        const auto docs = read_documents(corpus);
        const auto prompts = cfg.load_prompts();
        const auto counter = make_token_counter(cfg.tokenizer, cfg.token_factor);
        auto judge = make_chat_client(cfg.provider("filter_judge"), cfg.seed);
        if (docs.empty()) fmt::print(err_of(opts), "warning: corpus {} has no documents\n", corpus.string());

        const auto result = ingest_corpus(docs, *judge, *counter, prompts.contextualize,
                                          {cfg.token_budget, cfg.max_concurrent_requests});
        std::vector<std::string> lines;
        lines.reserve(result.chunks.size());
        for (const auto& c : result.chunks) lines.push_back(dump_line(to_json(c)));
        write_lines_atomic(out, lines);

        const auto& s = result.stats;
        auto& o = out_of(opts);
        fmt::print(o, "documents: {}\n", s.documents);
        fmt::print(o, "documents failed: {}\n", s.documents_failed);
        fmt::print(o, "chunks produced: {}\n", s.chunks_produced);
        fmt::print(o, "chunks filtered: {}\n", s.chunks_filtered);
        fmt::print(o, "chunks retained: {}\n", s.chunks_retained);
        fmt::print(o, "chunks oversized: {}\n", s.chunks_oversized);
        fmt::print(o, "judge parse failures: {}\n", s.judge_parse_failures);
        for (const auto& w : s.warnings) fmt::print(err_of(opts), "warning: {}\n", w);
        for (const auto& f : s.failures) fmt::print(err_of(opts), "failed: {}\n", f);
        return s.documents_failed > 0 ? kExitPartial : kExitOk;
    });
}

int cmd_embed(const CommonOptions& opts, const fs::path& chunks_path) {
    return guarded(opts, [&] {
        const auto cfg = load(opts, {"embedder"});
        if (cfg.store_path.empty()) throw ConfigError("store.path is not configured");
        require_input(chunks_path, "chunk file");
        auto chunks = read_chunks(chunks_path);

        const auto counter = make_token_counter(cfg.tokenizer, cfg.token_factor);
        for (const auto& c : chunks) {
            const std::size_t body = counter->count(c.text);
            const std::size_t total = c.contextual_text.empty() ? body : counter->count(c.contextual_text) + 1 + body;
            if (std::max<std::size_t>(total, c.token_count) > cfg.token_budget) {
                fmt::print(err_of(opts), "error: chunk {} has {} tokens, over the budget of {}; nothing written\n",
                           c.chunk_id, std::max<std::size_t>(total, c.token_count), cfg.token_budget);
                return static_cast<int>(kExitFatal);
            }
        }

        VectorStore store = fs::exists(cfg.store_path) ? open_store(cfg) : VectorStore(cfg.dim);
        auto embedder = make_embedder(cfg.provider("embedder"), cfg.dim, cfg.seed);

        const std::size_t batches = (chunks.size() + kEmbedBatch - 1) / kEmbedBatch;
        std::vector<std::vector<EmbeddingVector>> vectors(batches);
        std::vector<std::string> failures(batches);
        parallel_for(batches, cfg.max_concurrent_requests, [&](std::size_t b) {
            try {
                std::vector<std::string> texts;
                for (std::size_t i = b * kEmbedBatch; i < std::min(chunks.size(), (b + 1) * kEmbedBatch); ++i) {
                    texts.push_back(embedded_text(chunks[i]));
                }
                vectors[b] = embed_texts(*embedder, texts);
            } catch (const std::exception& e) {
                failures[b] = e.what();
            }
        });
        for (const auto& f : failures) {
            if (!f.empty()) throw Error(fmt::format("embedding failed: {}", f));
        }

        std::vector<StoredChunk> items;
        items.reserve(chunks.size());
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            items.push_back({std::move(chunks[i]), std::move(vectors[i / kEmbedBatch][i % kEmbedBatch])});
        }
        const std::size_t embedded = items.size();
        const std::size_t added = store.upsert(std::move(items));
        store.persist(cfg.store_path);
        fmt::print(out_of(opts), "embedded: {}\nnew: {}\nstore count: {}\n", embedded, added, store.size());
        return static_cast<int>(kExitOk);
    });
}

int cmd_caption(const CommonOptions& opts, const fs::path& manifest, const fs::path& out) {
    return guarded(opts, [&] {
        const auto cfg = load(opts, {"captioner"});
        require_input(manifest, "image manifest");
        const auto samples = read_image_manifest(manifest);
        const auto prompts = cfg.load_prompts();
        auto captioner = make_chat_client(cfg.provider("captioner"), cfg.seed);
        const bool mock = cfg.provider("captioner").is_mock();

        BatchSpec spec;
        spec.out = out;
        for (const auto& s : samples) spec.sample_ids.push_back(s.sample_id);
        spec.process = [&](std::size_t i) {
            const std::string ts = mock ? std::string(kMockTimestamp) : utc_timestamp();
            return to_json(generate_caption(samples[i], *captioner, prompts.caption, ts));
        };
        spec.is_ok = record_ok;
        spec.identity = {{"stage", "caption"}, {"config_hash", cfg.hash()}, {"prompt", prompts.caption.hash()}};
        spec.manifest_extra = {{"prompt_hashes", prompts.hashes()}, {"providers", provider_ids(cfg, {"captioner"})}};
        spec.resume = opts.resume;
        spec.workers = cfg.max_concurrent_requests;
        spec.stop = opts.stop;
        const auto outcome = run_batch(spec);
        fmt::print(out_of(opts), "samples: {}\ncaptioned: {}\nerrors: {}\ncarried over: {}\npending: {}\n",
                   outcome.total, outcome.ok, outcome.errors, outcome.skipped, outcome.pending);
        return outcome.errors > 0 || outcome.interrupted ? kExitPartial : kExitOk;
    });
}

int cmd_classify(const CommonOptions& opts, const fs::path& input, Variant variant, const fs::path& out) {
    return guarded(opts, [&] {
        std::vector<std::string_view> stages;
        switch (variant) {
            case Variant::simple_rag: stages = {"embedder", "responder"}; break;
            case Variant::advanced_rag: stages = {"embedder", "multiquery", "reranker", "responder"}; break;
            case Variant::naive_llm: stages = {"responder"}; break;
            case Variant::naive_vlm: stages = {"captioner"}; break;
        }
        const auto cfg = load(opts, stages);
        require_input(input, "input");
        const auto prompts = cfg.load_prompts();

        std::optional<VectorStore> store;
        if (uses_store(variant)) store = open_store(cfg);

        std::vector<ClassifyInput> inputs;
        if (variant == Variant::naive_vlm) {
            for (auto& s : read_image_manifest(input)) inputs.push_back({s.sample_id, std::nullopt, s.path, std::nullopt});
        } else {
            for (auto& c : read_captions(input)) {
                inputs.push_back({c.sample_id, c.ok() ? std::optional(c.caption) : std::nullopt, std::nullopt, c.error});
            }
        }

        std::unique_ptr<ChatClient> responder;
        std::unique_ptr<ChatClient> vision;
        std::unique_ptr<ChatClient> multiquery;
        std::unique_ptr<Embedder> embedder;
        std::unique_ptr<Reranker> reranker;
        for (const auto stage : stages) {
            const auto& p = cfg.provider(stage);
            if (stage == "responder") responder = make_chat_client(p, cfg.seed);
            if (stage == "captioner") vision = make_chat_client(p, cfg.seed);
            if (stage == "multiquery") multiquery = make_chat_client(p, cfg.seed);
            if (stage == "embedder") embedder = make_embedder(p, cfg.dim, cfg.seed);
            if (stage == "reranker") reranker = make_reranker(p, cfg.dim, cfg.seed);
        }
        PipelineContext ctx{&prompts,        store ? &*store : nullptr, responder.get(), vision.get(),
                            multiquery.get(), embedder.get(),            reranker.get(),  cfg.retrieval};

        BatchSpec spec;
        spec.out = out;
        for (const auto& in : inputs) spec.sample_ids.push_back(in.sample_id);
        spec.process = [&](std::size_t i) { return to_json(classify_sample(ctx, variant, inputs[i])); };
        spec.is_ok = record_ok;
        spec.identity = {{"stage", "classify"},
                         {"variant", std::string(to_string(variant))},
                         {"config_hash", cfg.hash()},
                         {"prompts", prompts.hashes()}};
        spec.manifest_extra = {{"prompt_hashes", prompts.hashes()}, {"providers", provider_ids(cfg, stages)}};
        if (store) {
            spec.manifest_extra["store_checksum"] = store_file_checksum(cfg.store_path);
            spec.manifest_extra["store_count"] = store->size();
        }
        spec.resume = opts.resume;
        spec.workers = cfg.max_concurrent_requests;
        spec.stop = opts.stop;
        const auto outcome = run_batch(spec);
        fmt::print(out_of(opts), "samples: {}\nclassified: {}\nerrors: {}\ncarried over: {}\npending: {}\n",
                   outcome.total, outcome.ok, outcome.errors, outcome.skipped, outcome.pending);
        return outcome.errors > 0 || outcome.interrupted ? kExitPartial : kExitOk;
    });
}

int cmd_evaluate(const CommonOptions& opts, const std::vector<fs::path>& result_files, const fs::path& labels_path,
                 EvalMode mode, const fs::path& out_dir) {
    return guarded(opts, [&] {
        const bool want_cls = mode != EvalMode::rag;
        const bool want_rag = mode != EvalMode::classification;
        const auto cfg = want_rag ? load(opts, {"eval_judge", "embedder"}) : load(opts, {});
        require_input(labels_path, "label file");
        for (const auto& f : result_files) require_input(f, "result file");

        const auto labels = read_labels(labels_path);
        std::map<std::string, const GroundTruthLabel*> by_id;
        for (const auto& l : labels) {
            if (!by_id.emplace(l.sample_id, &l).second) throw InvalidInput(fmt::format("duplicate label '{}'", l.sample_id));
        }

        std::vector<ResultRecord> results;
        std::set<std::pair<Variant, std::string>> seen;
        std::vector<std::string> unjoined;
        for (const auto& f : result_files) {
            for (auto& r : read_results(f)) {
                if (!seen.emplace(r.variant, r.sample_id).second) {
                    throw InvalidInput(fmt::format("sample '{}' appears twice for {}", r.sample_id, to_string(r.variant)));
                }
                if (!by_id.contains(r.sample_id)) {
                    unjoined.push_back(r.sample_id);
                    continue;
                }
                results.push_back(std::move(r));
            }
        }
        for (const auto& id : unjoined) fmt::print(err_of(opts), "unjoinable sample id: {}\n", id);
        fs::create_directories(out_dir);

        if (want_cls) {
            const auto buckets = split_rare_common(labels);
            const std::set<std::string> rare(buckets.rare.begin(), buckets.rare.end());
            const std::set<std::string> common(buckets.common.begin(), buckets.common.end());
            auto report = [&](const std::string& stem, const std::function<bool(const std::string&)>& keep) {
                std::map<Variant, std::vector<ClassificationResult>> grouped;
                for (const auto& r : results) {
                    if (!keep(r.sample_id)) continue;
                    grouped[r.variant].push_back({r.sample_id, r.response ? r.response->classification : Classification{},
                                                  *by_id.at(r.sample_id)});
                }
                std::map<Variant, std::vector<RankMetrics>> metrics;
                for (const auto& [variant, rs] : grouped) {
                    for (const Rank rank : kReportedRanks) metrics[variant].push_back(rank_metrics(rs, rank));
                }
                write_classification_report(out_dir, stem, metrics);
            };
            report("classification", [](const std::string&) { return true; });
            report("classification_rare", [&](const std::string& id) { return rare.contains(id); });
            report("classification_common", [&](const std::string& id) { return common.contains(id); });
        }

        if (want_rag) {
            const auto prompts = cfg.load_prompts();
            const bool needs_store = std::any_of(results.begin(), results.end(), [](const auto& r) { return !r.context.empty(); });
            std::optional<VectorStore> store;
            if (needs_store) store = open_store(cfg);
            auto judge = make_chat_client(cfg.provider("eval_judge"), cfg.seed);
            auto embedder = make_embedder(cfg.provider("embedder"), cfg.dim, cfg.seed);

            std::vector<RagScores> scores(results.size());
            parallel_for(results.size(), cfg.max_concurrent_requests, [&](std::size_t i) {
                const auto& r = results[i];
                RagScores& s = scores[i];
                s.sample_id = r.sample_id;
                s.variant = r.variant;
                if (!r.response || r.response->parse_failure) {
                    s.faithfulness.flags.emplace_back("no-response");
                    return;
                }
                const std::string& answer = r.response->biodiversity_knowledge;
                if (answer.find_first_not_of(" \t\r\n") == std::string::npos) {
                    s.faithfulness.flags.emplace_back("empty-answer");
                    return;
                }
                try {
                    std::vector<std::string> contexts;
                    for (const auto& c : r.context) {
                        const auto stored = store->get(c.chunk_id);
                        if (!stored) throw InvalidInput(fmt::format("context chunk {} is not in the store", c.chunk_id));
                        contexts.push_back(embedded_text(stored->chunk));
                    }
                    s.faithfulness = faithfulness(answer, contexts, *judge, prompts);
                } catch (const std::exception& e) {
                    spdlog::warn("{}: faithfulness undefined: {}", r.sample_id, e.what());
                    s.faithfulness = {};
                    s.faithfulness.flags.emplace_back("judge-failure");
                }
                if (!r.caption) {
                    s.relevancy.flags.emplace_back("no-query");
                    return;
                }
                try {
                    s.relevancy = answer_relevancy(answer, *r.caption, *judge, *embedder, prompts, cfg.relevancy_questions);
                } catch (const std::exception& e) {
                    spdlog::warn("{}: answer relevancy undefined: {}", r.sample_id, e.what());
                    s.relevancy = {};
                    s.relevancy.flags.emplace_back("generator-failure");
                }
            });
            write_rag_report(out_dir, scores);
        }

        fmt::print(out_of(opts), "results: {}\nlabels: {}\nunjoined: {}\nreports: {}\n", results.size(), labels.size(),
                   unjoined.size(), out_dir.string());
        return unjoined.empty() ? kExitOk : kExitPartial;
    });
}

int run_cli(int argc, char** argv, const std::atomic<bool>* stop) {
    CLI::App app{"taxorag: retrieval-augmented taxonomic classification of organism images"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "taxorag 0.1.0");

    CommonOptions opts;
    opts.stop = stop;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "Pipeline config file (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_flag("--resume", opts.resume, "Skip samples already completed in the output file");
        sub->add_flag("--mock", opts.mock, "Use the deterministic mock provider for every stage");
        sub->add_flag("--verbose,-v", opts.verbose, "Debug logging, including request bodies with keys redacted");
    };

    fs::path input;
    fs::path out;
    std::string variant_label;
    std::string mode_label = "both";
    std::vector<fs::path> result_files;
    fs::path labels;

    auto* ingest = app.add_subcommand("ingest", "Chunk, filter and contextualize a corpus");
    ingest->add_option("corpus", input, "Corpus file (one JSON document per line)")->required();
    ingest->add_option("--out", out, "Chunk file to write")->required();
    add_common(ingest);

    auto* embed = app.add_subcommand("embed", "Embed chunks into the configured vector store");
    embed->add_option("chunks", input, "Chunk file from ingest")->required();
    add_common(embed);

    auto* caption = app.add_subcommand("caption", "Caption every image in a manifest");
    caption->add_option("manifest", input, "Image manifest (sample_id, image per line)")->required();
    caption->add_option("--out", out, "Caption file to write")->required();
    add_common(caption);

    auto* classify = app.add_subcommand("classify", "Classify captions or images with one pipeline variant");
    classify->add_option("input", input, "Caption file, or image manifest for naive-vlm")->required();
    classify->add_option("--variant", variant_label, "simple-rag, advanced-rag, naive-llm or naive-vlm")
        ->required()
        ->check(CLI::IsMember({"simple-rag", "advanced-rag", "naive-llm", "naive-vlm"}));
    classify->add_option("--out", out, "Result file to write")->required();
    add_common(classify);

    auto* evaluate = app.add_subcommand("evaluate", "Score result files against labels");
    evaluate->add_option("results", result_files, "Result files")->required();
    evaluate->add_option("--labels", labels, "Label file")->required();
    evaluate->add_option("--mode", mode_label, "classification, rag or both")
        ->check(CLI::IsMember({"classification", "rag", "both"}));
    evaluate->add_option("--out", out, "Report directory")->required();
    add_common(evaluate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    spdlog::set_default_logger(
        std::make_shared<spdlog::logger>("taxorag", std::make_shared<spdlog::sinks::stderr_color_sink_mt>()));
    spdlog::set_level(opts.verbose ? spdlog::level::debug : spdlog::level::warn);

    if (*ingest) return cmd_ingest(opts, input, out);
    if (*embed) return cmd_embed(opts, input);
    if (*caption) return cmd_caption(opts, input, out);
    if (*classify) return cmd_classify(opts, input, parse_variant(variant_label), out);
    return cmd_evaluate(opts, result_files, labels, parse_eval_mode(mode_label), out);
}

}  // namespace taxorag

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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "taxorag/chunk.hpp"
#include "taxorag/embedding.hpp"

namespace taxorag {

struct StoredChunk {
    Chunk chunk;
    EmbeddingVector vector;
};

struct SearchHit {
    std::string chunk_id;
    /// Cosine similarity to the query, in [-1, 1].
    double score = 0.0;
    Chunk chunk;
};

/// Conjunctive metadata predicate; unset fields match everything.
struct MetadataFilter {
    std::optional<Source> source;
    /// Rank label or "unranked".
    std::optional<TaxonRank> taxon_rank;
    std::optional<std::string> taxon_name;

    [[nodiscard]] bool matches(const ChunkMetadata& m) const;
    [[nodiscard]] bool empty() const noexcept { return !source && !taxon_rank && !taxon_name; }
};

struct MmrParams {
    std::size_t k = 10;
    std::size_t fetch_k = 40;
    /// 1 = pure relevance, 0 = pure diversity.
    double lambda = 0.5;
};

/// Exact in-memory cosine index over unit-norm chunk embeddings.
///
/// Searches are exhaustive and deterministic: ties in score are broken by
/// ascending chunk_id, so results do not depend on insertion order. Any number
/// of concurrent searches may run; an upsert batch is applied atomically under
/// an exclusive lock.
class VectorStore {
  public:
    static constexpr std::uint32_t kFormatVersion = 1;

    explicit VectorStore(std::size_t dim);
    VectorStore(VectorStore&& other) noexcept;
    VectorStore& operator=(VectorStore&& other) noexcept;
    VectorStore(const VectorStore&) = delete;
    VectorStore& operator=(const VectorStore&) = delete;
    ~VectorStore();

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const;

    /// Inserts or replaces by chunk_id. The whole batch is validated first
    /// (dimension, unit norm within 1e-4, unique ids); returns how many ids were new.
    std::size_t upsert(std::vector<StoredChunk> items);

    [[nodiscard]] std::optional<StoredChunk> get(std::string_view chunk_id) const;

    /// All chunk ids in ascending order.
    [[nodiscard]] std::vector<std::string> ids() const;

    /// Top-k by cosine, score descending then chunk_id ascending.
    [[nodiscard]] std::vector<SearchHit> search_topk(const EmbeddingVector& query, std::size_t k,
                                                     const MetadataFilter& filter = {}) const;

    /// Maximal marginal relevance over the top `fetch_k` candidates. Greedily picks
    /// argmax lambda*cos(q,d) - (1-lambda)*max_s cos(d,s); hit scores stay cos(q,d).
    [[nodiscard]] std::vector<SearchHit> search_mmr(const EmbeddingVector& query, const MmrParams& params,
                                                    const MetadataFilter& filter = {}) const;

    /// Binary image of the store: header, records in chunk_id order, CRC-32 trailer.
    [[nodiscard]] std::vector<std::uint8_t> serialize() const;
    [[nodiscard]] static VectorStore deserialize(std::span<const std::uint8_t> bytes);

    /// Writes atomically (temp file + rename).
    void persist(const std::filesystem::path& path) const;
    [[nodiscard]] static VectorStore load(const std::filesystem::path& path);

  private:
    [[nodiscard]] std::span<const float> row(std::size_t i) const noexcept;
    [[nodiscard]] std::vector<std::size_t> topk_indices(std::span<const float> q, std::size_t k,
                                                        const MetadataFilter& filter,
                                                        std::vector<double>* scores) const;

    std::size_t dim_;
    std::vector<Chunk> chunks_;
    std::vector<float> matrix_;
    std::vector<double> sq_norms_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unique_ptr<std::shared_mutex> mutex_;
};

/// Hex CRC-32 trailer of a store file, used to fingerprint runs.
[[nodiscard]] std::string store_file_checksum(const std::filesystem::path& path);

}  // namespace taxorag

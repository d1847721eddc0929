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

#include "taxorag/vectorstore.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <unordered_set>

#include "taxorag/errors.hpp"
#include "taxorag/hashing.hpp"

namespace taxorag {

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "store format requires IEEE-754 floats");

constexpr std::array<std::uint8_t, 4> kMagic = {'T', 'R', 'V', 'S'};
// magic + version + dim + count
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8;
constexpr std::size_t kTrailerSize = 4;
constexpr double kUnitTolerance = 1e-4;

// Higher score first, then lower chunk_id.
struct ScoreOrder {
    const std::vector<double>& scores;
    const std::vector<Chunk>& chunks;
    bool operator()(std::size_t a, std::size_t b) const {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return chunks[a].chunk_id < chunks[b].chunk_id;
    }
};

class Writer {
  public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void str(std::string_view s) {
        if (s.size() > std::numeric_limits<std::uint32_t>::max()) throw InvalidInput("string too long for store format");
        u32(static_cast<std::uint32_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }
    void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
    void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    std::vector<std::uint8_t>& bytes() { return out_; }

  private:
    std::vector<std::uint8_t> out_;
};

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    [[nodiscard]] std::size_t remaining() const noexcept { return in_.size() - pos_; }

  private:
    void need(std::size_t n) const {
        if (remaining() < n) throw StoreFormatError(StoreFormatError::Kind::truncated, "store file is truncated");
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

bool MetadataFilter::matches(const ChunkMetadata& m) const {
    if (source && *source != m.source) return false;
    if (taxon_rank && *taxon_rank != m.taxon_rank) return false;
    if (taxon_name && !same_taxon(*taxon_name, m.taxon_name)) return false;
    return true;
}

VectorStore::VectorStore(std::size_t dim) : dim_(dim), mutex_(std::make_unique<std::shared_mutex>()) {
    if (dim == 0) throw InvalidInput("vector store dimension must be positive");
}

VectorStore::VectorStore(VectorStore&& other) noexcept
    : dim_(other.dim_),
      chunks_(std::move(other.chunks_)),
      matrix_(std::move(other.matrix_)),
      sq_norms_(std::move(other.sq_norms_)),
      index_(std::move(other.index_)),
      mutex_(std::move(other.mutex_)) {}

VectorStore& VectorStore::operator=(VectorStore&& other) noexcept {
    dim_ = other.dim_;
    chunks_ = std::move(other.chunks_);
    matrix_ = std::move(other.matrix_);
    sq_norms_ = std::move(other.sq_norms_);
    index_ = std::move(other.index_);
    mutex_ = std::move(other.mutex_);
    return *this;
}

VectorStore::~VectorStore() = default;

std::size_t VectorStore::size() const {
    std::shared_lock lock(*mutex_);
    return chunks_.size();
}

std::span<const float> VectorStore::row(std::size_t i) const noexcept {
    return std::span<const float>(matrix_).subspan(i * dim_, dim_);
}

std::size_t VectorStore::upsert(std::vector<StoredChunk> items) {
    std::unordered_set<std::string_view> seen;
    for (const auto& item : items) {
        if (item.vector.dim() != dim_) {
            throw DimensionMismatch(fmt::format("chunk '{}' has dim {}, store has dim {}", item.chunk.chunk_id,
                                                item.vector.dim(), dim_));
        }
        if (std::abs(l2_norm(item.vector.values()) - 1.0) > kUnitTolerance) {
            throw InvalidInput(fmt::format("chunk '{}' vector is not unit length", item.chunk.chunk_id));
        }
        if (item.chunk.chunk_id.empty()) throw InvalidInput("chunk without chunk_id");
        if (!seen.insert(item.chunk.chunk_id).second) {
            throw InvalidInput(fmt::format("chunk '{}' appears twice in one upsert batch", item.chunk.chunk_id));
        }
    }

    std::unique_lock lock(*mutex_);
    std::size_t inserted = 0;
    for (auto& item : items) {
        const auto values = item.vector.values();
        if (const auto it = index_.find(item.chunk.chunk_id); it != index_.end()) {
            std::copy(values.begin(), values.end(), matrix_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
            sq_norms_[it->second] = squared_norm(values);
            chunks_[it->second] = std::move(item.chunk);
        } else {
            index_.emplace(item.chunk.chunk_id, chunks_.size());
            matrix_.insert(matrix_.end(), values.begin(), values.end());
            sq_norms_.push_back(squared_norm(values));
            chunks_.push_back(std::move(item.chunk));
            ++inserted;
        }
    }
    return inserted;
}

std::optional<StoredChunk> VectorStore::get(std::string_view chunk_id) const {
    std::shared_lock lock(*mutex_);
    const auto it = index_.find(std::string(chunk_id));
    if (it == index_.end()) return std::nullopt;
    const auto r = row(it->second);
    return StoredChunk{chunks_[it->second], EmbeddingVector::from_unit(std::vector<float>(r.begin(), r.end()))};
}

std::vector<std::string> VectorStore::ids() const {
    std::shared_lock lock(*mutex_);
    std::vector<std::string> out;
    out.reserve(chunks_.size());
    for (const auto& c : chunks_) out.push_back(c.chunk_id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> VectorStore::topk_indices(std::span<const float> q, std::size_t k,
                                                   const MetadataFilter& filter, std::vector<double>* scores) const {
    scores->assign(chunks_.size(), 0.0);
    std::vector<std::size_t> candidates;
    candidates.reserve(chunks_.size());
    const bool filtered = !filter.empty();
    const double q_sq = squared_norm(q);
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        if (filtered && !filter.matches(chunks_[i].metadata)) continue;
        (*scores)[i] = cosine(q, q_sq, row(i), sq_norms_[i]);
        candidates.push_back(i);
    }
    const std::size_t take = std::min(k, candidates.size());
    const ScoreOrder order{*scores, chunks_};
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      order);
    candidates.resize(take);
    return candidates;
}

std::vector<SearchHit> VectorStore::search_topk(const EmbeddingVector& query, std::size_t k,
                                                const MetadataFilter& filter) const {
    if (query.dim() != dim_) {
        throw DimensionMismatch(fmt::format("query has dim {}, store has dim {}", query.dim(), dim_));
    }
    if (k == 0) throw InvalidInput("search_topk requires k >= 1");
    std::shared_lock lock(*mutex_);
    std::vector<double> scores;
    const auto top = topk_indices(query.values(), k, filter, &scores);
    std::vector<SearchHit> hits;
    hits.reserve(top.size());
    for (const auto i : top) hits.push_back({chunks_[i].chunk_id, scores[i], chunks_[i]});
    return hits;
}

std::vector<SearchHit> VectorStore::search_mmr(const EmbeddingVector& query, const MmrParams& params,
                                               const MetadataFilter& filter) const {
    if (query.dim() != dim_) {
        throw DimensionMismatch(fmt::format("query has dim {}, store has dim {}", query.dim(), dim_));
    }
    if (params.k == 0 || params.k > params.fetch_k) {
        throw InvalidInput(fmt::format("MMR requires 1 <= k <= fetch_k (k={}, fetch_k={})", params.k, params.fetch_k));
    }
    if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) {
        throw InvalidInput(fmt::format("MMR lambda must lie in [0, 1], got {}", params.lambda));
    }

    std::shared_lock lock(*mutex_);
    std::vector<double> relevance;
    std::vector<std::size_t> pool = topk_indices(query.values(), params.fetch_k, filter, &relevance);
    const std::size_t take = std::min(params.k, pool.size());

    // max_sim[j]: highest similarity of pool[j] to anything selected so far.
    std::vector<double> max_sim(pool.size(), -std::numeric_limits<double>::infinity());
    std::vector<bool> used(pool.size(), false);
    std::vector<std::size_t> selected;
    selected.reserve(take);

    while (selected.size() < take) {
        std::size_t best = pool.size();
        double best_score = 0.0;
        for (std::size_t j = 0; j < pool.size(); ++j) {
            if (used[j]) continue;
            const double rel = relevance[pool[j]];
            const double score =
                selected.empty() ? rel : params.lambda * rel - (1.0 - params.lambda) * max_sim[j];
            if (best == pool.size() || score > best_score ||
                (score == best_score && chunks_[pool[j]].chunk_id < chunks_[pool[best]].chunk_id)) {
                best = j;
                best_score = score;
            }
        }
        used[best] = true;
        selected.push_back(pool[best]);
        const std::size_t picked = pool[best];
        for (std::size_t j = 0; j < pool.size(); ++j) {
            if (used[j]) continue;
            const double sim = cosine(row(pool[j]), sq_norms_[pool[j]], row(picked), sq_norms_[picked]);
            max_sim[j] = std::max(max_sim[j], sim);
        }
    }

    std::vector<SearchHit> hits;
    hits.reserve(selected.size());
    for (const auto i : selected) hits.push_back({chunks_[i].chunk_id, relevance[i], chunks_[i]});
    return hits;
}

std::vector<std::uint8_t> VectorStore::serialize() const {
    std::shared_lock lock(*mutex_);
    std::vector<std::size_t> order(chunks_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [this](std::size_t a, std::size_t b) { return chunks_[a].chunk_id < chunks_[b].chunk_id; });

    Writer w;
    w.raw(kMagic);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(dim_));
    w.u64(chunks_.size());
    for (const auto i : order) {
        const auto& c = chunks_[i];
        w.str(c.chunk_id);
        w.str(c.doc_id);
        w.u32(c.seq);
        w.u32(c.token_count);
        w.str(to_string(c.metadata.taxon_rank));
        w.str(to_string(c.metadata.source));
        w.str(c.metadata.taxon_name);
        w.str(c.contextual_text);
        w.str(c.text);
        for (const float f : row(i)) w.f32(f);
    }
    const std::uint32_t crc = crc32(w.bytes());
    w.u32(crc);
    return std::move(w.bytes());
}

VectorStore VectorStore::deserialize(std::span<const std::uint8_t> bytes) {
    using Kind = StoreFormatError::Kind;
    if (bytes.size() < kHeaderSize + kTrailerSize) {
        throw StoreFormatError(Kind::truncated, "store file is too short to hold a header");
    }
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw StoreFormatError(Kind::bad_magic, "not a vector store file (bad magic)");
    }

    Reader r(bytes.subspan(kMagic.size()));
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw StoreFormatError(Kind::version_mismatch,
                               fmt::format("store format version {} (expected {})", version, kFormatVersion));
    }
    const std::uint32_t dim = r.u32();
    const std::uint64_t count = r.u64();
    if (dim == 0) throw StoreFormatError(Kind::malformed, "store header has dim 0");

    struct RawRecord {
        Chunk chunk;
        std::string rank, source;
        std::vector<float> vector;
    };
    std::vector<RawRecord> records;
    for (std::uint64_t n = 0; n < count; ++n) {
        if (r.remaining() <= kTrailerSize) throw StoreFormatError(Kind::truncated, "store file is truncated");
        RawRecord rec;
        rec.chunk.chunk_id = r.str();
        rec.chunk.doc_id = r.str();
        rec.chunk.seq = r.u32();
        rec.chunk.token_count = r.u32();
        rec.rank = r.str();
        rec.source = r.str();
        rec.chunk.metadata.taxon_name = r.str();
        rec.chunk.contextual_text = r.str();
        rec.chunk.text = r.str();
        if (r.remaining() < static_cast<std::size_t>(dim) * 4) {
            throw StoreFormatError(Kind::truncated, "store file is truncated");
        }
        rec.vector.resize(dim);
        for (auto& f : rec.vector) f = r.f32();
        records.push_back(std::move(rec));
    }
    if (r.remaining() != kTrailerSize) {
        throw StoreFormatError(r.remaining() < kTrailerSize ? Kind::truncated : Kind::malformed,
                               "store file length does not match its header");
    }
    const std::uint32_t stored_crc = r.u32();
    const std::uint32_t actual_crc = crc32(bytes.first(bytes.size() - kTrailerSize));
    if (stored_crc != actual_crc) {
        throw StoreFormatError(Kind::checksum_mismatch,
                               fmt::format("store checksum mismatch (stored {:08x}, computed {:08x})", stored_crc,
                                           actual_crc));
    }

    VectorStore store(dim);
    std::vector<StoredChunk> items;
    items.reserve(records.size());
    try {
        for (auto& rec : records) {
            rec.chunk.metadata.taxon_rank = parse_taxon_rank(rec.rank);
            rec.chunk.metadata.source = parse_source(rec.source);
            items.push_back({std::move(rec.chunk), EmbeddingVector::from_unit(std::move(rec.vector))});
        }
        const std::size_t n = items.size();
        if (store.upsert(std::move(items)) != n) throw InvalidInput("duplicate chunk ids");
    } catch (const InvalidInput& e) {
        throw StoreFormatError(Kind::malformed, fmt::format("store file is malformed: {}", e.what()));
    }
    return store;
}

void VectorStore::persist(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write '{}'", tmp.string()));
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(fmt::format("short write to '{}'", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open store file '{}'", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

VectorStore VectorStore::load(const std::filesystem::path& path) { return deserialize(read_all(path)); }

std::string store_file_checksum(const std::filesystem::path& path) {
    const auto bytes = read_all(path);
    if (bytes.size() < kTrailerSize) throw StoreFormatError(StoreFormatError::Kind::truncated, "store file is truncated");
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
    return fmt::format("{:08x}", v);
}

}  // namespace taxorag

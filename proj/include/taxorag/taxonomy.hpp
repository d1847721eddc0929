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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace taxorag {

/// The seven Linnaean ranks, highest first. The underlying value is the depth.
enum class Rank : std::uint8_t { kingdom = 0, phylum, klass, order, family, genus, species };

inline constexpr std::array<Rank, 7> kAllRanks = {Rank::kingdom, Rank::phylum, Rank::klass, Rank::order,
                                                  Rank::family,  Rank::genus,  Rank::species};

/// Ranks shown in metric tables (Kingdom is implied for every sample).
inline constexpr std::array<Rank, 6> kReportedRanks = {Rank::phylum, Rank::klass, Rank::order,
                                                       Rank::family, Rank::genus, Rank::species};

enum class RankRelation { higher, equal, lower };

/// Position of `a` relative to `b` in the hierarchy: Kingdom is higher than Species.
[[nodiscard]] constexpr RankRelation compare_ranks(Rank a, Rank b) noexcept {
    if (a == b) return RankRelation::equal;
    return static_cast<int>(a) < static_cast<int>(b) ? RankRelation::higher : RankRelation::lower;
}

[[nodiscard]] constexpr std::size_t depth(Rank r) noexcept { return static_cast<std::size_t>(r); }

/// Canonical label, e.g. "Class".
[[nodiscard]] std::string_view to_string(Rank r) noexcept;

/// Case-insensitive parse of one of the seven labels; throws InvalidInput otherwise.
[[nodiscard]] Rank parse_rank(std::string_view label);

/// Non-throwing variant of parse_rank.
[[nodiscard]] std::optional<Rank> try_parse_rank(std::string_view label) noexcept;

/// Rank tag carried by corpus documents, where "unranked" is allowed.
using TaxonRank = std::optional<Rank>;

[[nodiscard]] std::string to_string(const TaxonRank& r);
[[nodiscard]] TaxonRank parse_taxon_rank(std::string_view label);

struct TaxonEntry {
    Rank rank;
    std::string name;

    friend bool operator==(const TaxonEntry&, const TaxonEntry&) = default;
};

/// Canonical key for comparing taxon names: trimmed, NFC-normalized and case-folded.
[[nodiscard]] std::string taxon_key(std::string_view name);

[[nodiscard]] bool same_taxon(std::string_view a, std::string_view b);

/// A rank-wise taxonomic assignment that abstains below some rank.
///
/// Entries are unique per rank, in descending rank order, and prefix-closed:
/// every rank from Phylum down to the deepest entry is present. Kingdom is the
/// implied root of the hierarchy and may be omitted. Names are trimmed,
/// non-empty and free of control characters.
class Classification {
  public:
    /// Fully abstained.
    Classification() = default;

    /// Validates the invariants above; throws InvalidInput on violation.
    static Classification from_entries(std::vector<TaxonEntry> entries);

    [[nodiscard]] const std::vector<TaxonEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::optional<Rank> deepest_rank() const noexcept;
    [[nodiscard]] bool has(Rank r) const noexcept;
    [[nodiscard]] std::optional<std::string_view> name_at(Rank r) const noexcept;
    [[nodiscard]] bool abstained() const noexcept { return entries_.empty(); }

    friend bool operator==(const Classification&, const Classification&) = default;

  private:
    explicit Classification(std::vector<TaxonEntry> entries) : entries_(std::move(entries)) {}

    std::vector<TaxonEntry> entries_;
};

/// Output of enforce_prefix: the repaired classification and whatever was cut.
struct PrefixRepair {
    Classification classification;
    std::vector<TaxonEntry> dropped;
};

/// Truncates `raw` at the first missing (or invalid) rank below Kingdom. An
/// entry whose name is blank or contains control characters counts as missing.
/// Total and idempotent.
[[nodiscard]] PrefixRepair enforce_prefix(const std::map<Rank, std::string>& raw);

[[nodiscard]] std::map<Rank, std::string> to_map(const Classification& c);

/// A reference label: complete from Phylum (Kingdom optional) down to Species.
struct GroundTruthLabel {
    std::string sample_id;
    Classification classification;
    std::optional<std::uint64_t> n_obs;
};

/// Validates completeness; throws InvalidInput naming the first gap.
[[nodiscard]] GroundTruthLabel make_ground_truth(std::string sample_id, const std::map<Rank, std::string>& ranks,
                                                 std::optional<std::uint64_t> n_obs);

}  // namespace taxorag

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

#include "taxorag/taxonomy.hpp"

#include <fmt/format.h>

#include "taxorag/errors.hpp"
#include "taxorag/text.hpp"

namespace taxorag {

namespace {

constexpr std::array<std::string_view, 7> kRankLabels = {"Kingdom", "Phylum", "Class",  "Order",
                                                         "Family",  "Genus",  "Species"};

bool valid_name(std::string_view name) {
    const auto t = text::trim(name);
    return !t.empty() && !text::has_control_chars(t);
}

}  // namespace

std::string_view to_string(Rank r) noexcept { return kRankLabels[depth(r)]; }

std::optional<Rank> try_parse_rank(std::string_view label) noexcept {
    label = text::trim(label);
    for (const Rank r : kAllRanks) {
        const auto want = kRankLabels[depth(r)];
        if (label.size() == want.size() && text::starts_with_icase(label, want)) return r;
    }
    return std::nullopt;
}

Rank parse_rank(std::string_view label) {
    if (auto r = try_parse_rank(label)) return *r;
    throw InvalidInput(fmt::format("unknown taxonomic rank '{}'", label));
}

std::string to_string(const TaxonRank& r) { return r ? std::string(to_string(*r)) : std::string("unranked"); }

TaxonRank parse_taxon_rank(std::string_view label) {
    if (text::ascii_lower(text::trim(label)) == "unranked") return std::nullopt;
    return parse_rank(label);
}

std::string taxon_key(std::string_view name) { return text::nfc_casefold(text::trim(name)); }

bool same_taxon(std::string_view a, std::string_view b) { return taxon_key(a) == taxon_key(b); }

Classification Classification::from_entries(std::vector<TaxonEntry> entries) {
    std::size_t expected = entries.empty() ? 0 : depth(entries.front().rank);
    if (expected > depth(Rank::phylum)) {
        throw InvalidInput(fmt::format("classification starts at {} instead of Kingdom or Phylum",
                                       to_string(entries.front().rank)));
    }
    for (auto& e : entries) {
        if (depth(e.rank) != expected) {
            throw InvalidInput(fmt::format("classification is not prefix-closed at {}", to_string(e.rank)));
        }
        if (!valid_name(e.name)) {
            throw InvalidInput(fmt::format("invalid taxon name at {}", to_string(e.rank)));
        }
        e.name = std::string(text::trim(e.name));
        ++expected;
    }
    return Classification(std::move(entries));
}

std::optional<Rank> Classification::deepest_rank() const noexcept {
    if (entries_.empty()) return std::nullopt;
    return entries_.back().rank;
}

bool Classification::has(Rank r) const noexcept { return name_at(r).has_value(); }

std::optional<std::string_view> Classification::name_at(Rank r) const noexcept {
    for (const auto& e : entries_) {
        if (e.rank == r) return std::string_view(e.name);
    }
    return std::nullopt;
}

PrefixRepair enforce_prefix(const std::map<Rank, std::string>& raw) {
    PrefixRepair out;
    std::vector<TaxonEntry> kept;
    bool truncated = false;
    for (const Rank r : kAllRanks) {
        const auto it = raw.find(r);
        const bool present = it != raw.end() && valid_name(it->second);
        if (truncated) {
            if (it != raw.end()) out.dropped.push_back({r, it->second});
            continue;
        }
        if (present) {
            kept.push_back({r, std::string(text::trim(it->second))});
        } else if (r != Rank::kingdom) {
            truncated = true;
            if (it != raw.end()) out.dropped.push_back({r, it->second});
        } else if (it != raw.end()) {
            out.dropped.push_back({r, it->second});
        }
    }
    out.classification = Classification::from_entries(std::move(kept));
    return out;
}

std::map<Rank, std::string> to_map(const Classification& c) {
    std::map<Rank, std::string> out;
    for (const auto& e : c.entries()) out.emplace(e.rank, e.name);
    return out;
}

GroundTruthLabel make_ground_truth(std::string sample_id, const std::map<Rank, std::string>& ranks,
                                   std::optional<std::uint64_t> n_obs) {
    if (text::trim(sample_id).empty()) throw InvalidInput("ground-truth label without sample_id");
    for (const Rank r : kAllRanks) {
        if (r == Rank::kingdom) continue;
        const auto it = ranks.find(r);
        if (it == ranks.end() || !valid_name(it->second)) {
            throw InvalidInput(fmt::format("ground truth for '{}' has a gap at {}", sample_id, to_string(r)));
        }
    }
    auto repaired = enforce_prefix(ranks);
    if (!repaired.dropped.empty()) {
        throw InvalidInput(fmt::format("ground truth for '{}' has an invalid Kingdom entry", sample_id));
    }
    return GroundTruthLabel{std::move(sample_id), std::move(repaired.classification), n_obs};
}

}  // namespace taxorag

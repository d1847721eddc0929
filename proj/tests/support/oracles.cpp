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

#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace taxorag::oracle {

double float_cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

namespace {

bool before(const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

}  // namespace

std::vector<Hit> topk(const std::vector<Item>& items, const std::vector<float>& q, std::size_t k,
                      std::optional<int> tag) {
    std::vector<Hit> all;
    for (const auto& it : items) {
        if (tag && it.tag != *tag) continue;
        all.push_back({it.id, float_cosine(q, it.v)});
    }
    std::sort(all.begin(), all.end(), before);
    if (all.size() > k) all.resize(k);
    return all;
}

std::vector<Hit> mmr(const std::vector<Item>& items, const std::vector<float>& q, std::size_t k, std::size_t fetch_k,
                     double lambda) {
    const auto pool_hits = topk(items, q, fetch_k);
    std::vector<const Item*> pool;
    for (const auto& h : pool_hits) {
        for (const auto& it : items) {
            if (it.id == h.id) pool.push_back(&it);
        }
    }
    std::vector<const Item*> chosen;
    std::vector<Hit> out;
    while (out.size() < std::min(k, pool.size())) {
        const Item* best = nullptr;
        double best_score = 0.0;
        for (const Item* d : pool) {
            if (std::find(chosen.begin(), chosen.end(), d) != chosen.end()) continue;
            const double rel = float_cosine(q, d->v);
            double score = rel;
            if (!chosen.empty()) {
                double redundancy = -std::numeric_limits<double>::infinity();
                for (const Item* s : chosen) redundancy = std::max(redundancy, float_cosine(d->v, s->v));
                score = lambda * rel - (1.0 - lambda) * redundancy;
            }
            if (best == nullptr || score > best_score || (score == best_score && d->id < best->id)) {
                best = d;
                best_score = score;
            }
        }
        chosen.push_back(best);
        out.push_back({best->id, float_cosine(q, best->v)});
    }
    return out;
}

std::vector<double> mock_embedding(std::string_view text, std::size_t dim, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::uint64_t x = h ^ seed;
    if (x == 0) x = 14695981039346656037ULL;
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (auto& e : v) {
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        const std::uint64_t r = x * 2685821657736338717ULL;
        e = std::ldexp(static_cast<double>(r >> 11), -53) * 2.0 - 1.0;
        norm2 += e * e;
    }
    const double norm = std::sqrt(norm2);
    for (auto& e : v) e /= norm;
    return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double pos = 1.0 + static_cast<double>(values.size() - 1) * p;
    const double lower = std::floor(pos);
    const auto j = static_cast<std::size_t>(lower);
    if (j >= values.size()) return values.back();
    return values[j - 1] + (pos - lower) * (values[j] - values[j - 1]);
}

Metrics rank_metrics(const std::vector<std::string>& truth, const std::vector<std::optional<std::string>>& pred) {
    Metrics m;
    std::vector<std::size_t> attempted;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (pred[i]) attempted.push_back(i);
    }
    m.attempts = attempted.size();
    if (attempted.empty()) return m;

    std::set<std::string> true_classes;
    std::set<std::string> labels;
    std::size_t correct = 0;
    for (const auto i : attempted) {
        true_classes.insert(truth[i]);
        labels.insert(truth[i]);
        labels.insert(*pred[i]);
        if (truth[i] == *pred[i]) ++correct;
    }

    double acc = 0.0;
    for (const auto& c : true_classes) {
        double members = 0.0;
        double hits = 0.0;
        for (const auto i : attempted) {
            if (truth[i] != c) continue;
            members += 1.0;
            if (*pred[i] == c) hits += 1.0;
        }
        acc += hits / members;
    }
    m.macro_accuracy = acc / static_cast<double>(true_classes.size());

    double f1 = 0.0;
    for (const auto& l : labels) {
        double tp = 0.0;
        double predicted = 0.0;
        double actual = 0.0;
        for (const auto i : attempted) {
            if (*pred[i] == l) predicted += 1.0;
            if (truth[i] == l) actual += 1.0;
            if (*pred[i] == l && truth[i] == l) tp += 1.0;
        }
        const double precision = predicted == 0.0 ? 0.0 : tp / predicted;
        const double recall = actual == 0.0 ? 0.0 : tp / actual;
        f1 += precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    }
    m.macro_f1 = f1 / static_cast<double>(labels.size());
    m.micro_accuracy = static_cast<double>(correct) / static_cast<double>(attempted.size());
    return m;
}

}  // namespace taxorag::oracle

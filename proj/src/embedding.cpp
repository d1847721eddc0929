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

#include "taxorag/embedding.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "taxorag/errors.hpp"

namespace taxorag {

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> values, double tolerance) {
    if (values.empty()) throw InvalidInput("empty embedding vector");
    for (const float x : values) {
        if (!std::isfinite(x)) throw InvalidInput("embedding vector has a non-finite component");
    }
    const double n = l2_norm(values);
    if (std::abs(n - 1.0) > tolerance) {
        throw InvalidInput(fmt::format("embedding vector is not unit length (norm {:.9g})", n));
    }
    return EmbeddingVector(std::move(values));
}

EmbeddingVector normalize(std::span<const double> raw) {
    if (raw.empty()) throw InvalidInput("cannot normalize an empty vector");
    double scale = 0.0;
    for (const double x : raw) {
        if (!std::isfinite(x)) throw InvalidInput("cannot normalize a vector with non-finite components");
        scale = std::max(scale, std::abs(x));
    }
    if (scale == 0.0) throw InvalidInput("cannot normalize the zero vector");
    // Divide by the largest magnitude first so squaring cannot overflow or underflow.
    double sum = 0.0;
    for (const double x : raw) {
        const double s = x / scale;
        sum += s * s;
    }
    const double norm = std::sqrt(sum);
    std::vector<float> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<float>((raw[i] / scale) / norm);
    return EmbeddingVector(std::move(out));
}

EmbeddingVector normalize(std::span<const float> raw) {
    std::vector<double> widened(raw.begin(), raw.end());
    return normalize(std::span<const double>(widened));
}

double squared_norm(std::span<const float> v) noexcept {
    double sum = 0.0;
    for (const float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
    return sum;
}

double l2_norm(std::span<const float> v) noexcept { return std::sqrt(squared_norm(v)); }

double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double sum = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw DimensionMismatch(fmt::format("cosine of vectors with dims {} and {}", a.dim(), b.dim()));
    }
    return cosine(a.values(), b.values());
}

double cosine(std::span<const float> a, double a_sq, std::span<const float> b, double b_sq) noexcept {
    const double denom = std::sqrt(a_sq * b_sq);
    if (!(denom > 0.0)) return 0.0;
    return std::clamp(dot(a, b) / denom, -1.0, 1.0);
}

double cosine(std::span<const float> a, std::span<const float> b) noexcept {
    return cosine(a, squared_norm(a), b, squared_norm(b));
}

}  // namespace taxorag

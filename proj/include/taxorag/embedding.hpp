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

#include <span>
#include <vector>

namespace taxorag {

/// A unit-norm, finite embedding. Only `normalize` and `EmbeddingVector::from_unit`
/// construct one, so every instance satisfies |v| = 1 (within float rounding).
class EmbeddingVector {
  public:
    EmbeddingVector() = default;

    /// Adopts values that are already unit length; throws InvalidInput unless
    /// all components are finite and |norm - 1| <= tolerance.
    static EmbeddingVector from_unit(std::vector<float> values, double tolerance = 1e-4);

    [[nodiscard]] std::span<const float> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

  private:
    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}
    friend EmbeddingVector normalize(std::span<const double> raw);

    std::vector<float> values_;
};

/// Scales `raw` to unit L2 norm. Throws InvalidInput for empty, all-zero or
/// non-finite input.
[[nodiscard]] EmbeddingVector normalize(std::span<const double> raw);
[[nodiscard]] EmbeddingVector normalize(std::span<const float> raw);

/// L2 norm accumulated in double.
[[nodiscard]] double l2_norm(std::span<const float> v) noexcept;

/// Cosine similarity clamped to [-1, 1]. Throws DimensionMismatch when dims differ.
[[nodiscard]] double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// dot(a, b) / sqrt(|a|^2 |b|^2) in double, clamped. Stored vectors are only unit
/// length to float precision; dividing by the norms keeps cosine(v, v) at exactly 1.
/// Spans must have equal length; a zero vector scores 0.
[[nodiscard]] double cosine(std::span<const float> a, std::span<const float> b) noexcept;

/// Squared L2 norm accumulated in double.
[[nodiscard]] double squared_norm(std::span<const float> v) noexcept;

/// Cosine given precomputed squared norms.
[[nodiscard]] double cosine(std::span<const float> a, double a_sq, std::span<const float> b, double b_sq) noexcept;

/// Unclamped dot product in double, accumulated in index order.
[[nodiscard]] double dot(std::span<const float> a, std::span<const float> b) noexcept;

}  // namespace taxorag

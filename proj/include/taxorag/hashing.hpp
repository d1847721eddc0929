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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace taxorag {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a.
[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                              std::uint64_t state = kFnvOffsetBasis) noexcept {
    for (const char c : bytes) {
        state ^= static_cast<std::uint8_t>(c);
        state *= kFnvPrime;
    }
    return state;
}

[[nodiscard]] std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept;

/// xorshift64* (Vigna). The state must be nonzero; a zero seed is replaced
/// by the FNV offset basis.
class Xorshift64Star {
  public:
    explicit constexpr Xorshift64Star(std::uint64_t seed) noexcept
        : state_(seed == 0 ? kFnvOffsetBasis : seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    /// Uniform double in [-1, 1) built from the top 53 bits.
    constexpr double next_signed_unit() noexcept {
        const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return 2.0 * u - 1.0;
    }

    /// Uniform double in [0, 1).
    constexpr double next_unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

/// Lower-case, zero-padded 16 hex digits.
[[nodiscard]] std::string hex64(std::uint64_t v);

[[nodiscard]] std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

/// Lower-case hex SHA-256 digest.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);

}  // namespace taxorag

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

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the corpus, pipeline and eval code. All
// functions treat their input as UTF-8.
namespace taxorag::text {

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;

/// Splits on runs of ASCII whitespace; never yields empty pieces.
[[nodiscard]] std::vector<std::string_view> split_whitespace(std::string_view s);

/// Trims and replaces every whitespace run with a single space.
[[nodiscard]] std::string collapse_whitespace(std::string_view s);

/// Unicode NFC normalization followed by full case folding.
[[nodiscard]] std::string nfc_casefold(std::string_view s);

/// True if `s` contains a C0/C1 control character or DEL.
[[nodiscard]] bool has_control_chars(std::string_view s) noexcept;

/// Sentence segmentation used by the mock judges: a sentence ends at a run of
/// '.', '!' or '?' followed by whitespace or end of text. Returned sentences
/// are whitespace-collapsed and never empty.
[[nodiscard]] std::vector<std::string> sentences(std::string_view s);

/// Splits on '\n' (a trailing '\r' is dropped from each line).
[[nodiscard]] std::vector<std::string_view> lines(std::string_view s);

[[nodiscard]] bool starts_with_icase(std::string_view s, std::string_view prefix) noexcept;

[[nodiscard]] std::string ascii_lower(std::string_view s);

}  // namespace taxorag::text

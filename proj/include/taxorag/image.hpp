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
#include <span>
#include <string_view>
#include <vector>

namespace taxorag {

enum class ImageFormat { png, jpeg };

struct ImageInfo {
    ImageFormat format;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
};

/// Structural check of a PNG or JPEG stream: signature, header dimensions,
/// chunk/segment framing (and PNG chunk CRCs) up to the end marker. Throws
/// InvalidInput describing the first defect.
ImageInfo inspect_image(std::span<const std::uint8_t> bytes);

[[nodiscard]] std::string_view mime_type(ImageFormat f) noexcept;

[[nodiscard]] std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace taxorag

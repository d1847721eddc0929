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

#include "taxorag/image.hpp"

#include <fmt/format.h>

#include <array>
#include <fstream>
#include <iterator>

#include "taxorag/errors.hpp"
#include "taxorag/hashing.hpp"

namespace taxorag {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t at) {
    return (static_cast<std::uint32_t>(b[at]) << 24) | (static_cast<std::uint32_t>(b[at + 1]) << 16) |
           (static_cast<std::uint32_t>(b[at + 2]) << 8) | static_cast<std::uint32_t>(b[at + 3]);
}

std::uint16_t be16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

ImageInfo inspect_png(std::span<const std::uint8_t> b) {
    ImageInfo info{ImageFormat::png};
    std::size_t pos = kPngSignature.size();
    bool first = true;
    bool seen_idat = false;
    while (true) {
        if (pos + 12 > b.size()) throw InvalidInput("PNG ends before IEND");
        const std::uint32_t len = be32(b, pos);
        if (len > b.size() - pos - 12) throw InvalidInput("PNG chunk overruns the file");
        const auto type = b.subspan(pos + 4, 4);
        const std::string_view type_name(reinterpret_cast<const char*>(type.data()), 4);
        const auto crc_region = b.subspan(pos + 4, 4 + len);
        if (crc32(crc_region) != be32(b, pos + 8 + len)) {
            throw InvalidInput(fmt::format("PNG chunk {} has a bad CRC", type_name));
        }
        if (first) {
            if (type_name != "IHDR" || len != 13) throw InvalidInput("PNG does not start with IHDR");
            info.width = be32(b, pos + 8);
            info.height = be32(b, pos + 12);
            if (info.width == 0 || info.height == 0) throw InvalidInput("PNG has zero dimensions");
            first = false;
        }
        if (type_name == "IDAT") seen_idat = true;
        pos += 12 + len;
        if (type_name == "IEND") break;
    }
    if (!seen_idat) throw InvalidInput("PNG has no image data");
    return info;
}

bool is_sof(std::uint8_t marker) {
    return marker >= 0xc0 && marker <= 0xcf && marker != 0xc4 && marker != 0xc8 && marker != 0xcc;
}

ImageInfo inspect_jpeg(std::span<const std::uint8_t> b) {
    ImageInfo info{ImageFormat::jpeg};
    std::size_t pos = 2;
    bool seen_sof = false;
    while (true) {
        if (pos + 4 > b.size()) throw InvalidInput("JPEG ends before start of scan");
        if (b[pos] != 0xff) throw InvalidInput("JPEG segment marker expected");
        const std::uint8_t marker = b[pos + 1];
        if (marker == 0xff) {  // fill byte
            ++pos;
            continue;
        }
        if (marker == 0xd8 || (marker >= 0xd0 && marker <= 0xd7) || marker == 0x01) {
            pos += 2;
            continue;
        }
        const std::uint16_t len = be16(b, pos + 2);
        if (len < 2 || pos + 2 + len > b.size()) throw InvalidInput("JPEG segment overruns the file");
        if (is_sof(marker)) {
            if (len < 7) throw InvalidInput("JPEG frame header too short");
            info.height = be16(b, pos + 5);
            info.width = be16(b, pos + 7);
            if (info.width == 0 || info.height == 0) throw InvalidInput("JPEG has zero dimensions");
            seen_sof = true;
        }
        pos += 2 + len;
        if (marker == 0xda) break;
    }
    if (!seen_sof) throw InvalidInput("JPEG has no frame header");
    // Entropy-coded data follows; the stream must close with EOI.
    std::size_t end = b.size();
    while (end > pos && b[end - 1] == 0x00) --end;
    if (end < pos + 2 || b[end - 2] != 0xff || b[end - 1] != 0xd9) throw InvalidInput("JPEG is missing its EOI marker");
    return info;
}

}  // namespace

ImageInfo inspect_image(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw InvalidInput("image is empty");
    if (bytes.size() >= kPngSignature.size() && std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
        return inspect_png(bytes);
    }
    if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) return inspect_jpeg(bytes);
    throw InvalidInput("image is neither PNG nor JPEG");
}

std::string_view mime_type(ImageFormat f) noexcept { return f == ImageFormat::png ? "image/png" : "image/jpeg"; }

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput(fmt::format("cannot open '{}'", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace taxorag

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dragwarp/raster.hpp"

namespace dragwarp {

using Bytes = std::vector<std::uint8_t>;

/// 8-bit RGB PNG.
Bytes encode_png(const ImageBuffer& image);
/// Single-channel 8-bit PNG, 255 for set bits and 0 otherwise.
Bytes encode_png(const BinaryMask& mask);

/// Any PNG flavor, converted to RGB. Throws InvalidInput on undecodable or oversize data.
ImageBuffer decode_png_image(std::span<const std::uint8_t> bytes);
/// Any PNG flavor, converted to gray; values > 127 are inside.
BinaryMask decode_png_mask(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Area-averaging resample so the longer side equals long_edge; aspect ratio kept.
ImageBuffer resize_long_edge(const ImageBuffer& image, int long_edge);
ImageBuffer resize_image(const ImageBuffer& image, int width, int height);
/// Resamples as 0/255 gray and re-thresholds at > 127.
BinaryMask resize_mask(const BinaryMask& mask, int width, int height);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws InvalidInput on characters outside the standard alphabet.
Bytes base64_decode(std::string_view text);

}  // namespace dragwarp

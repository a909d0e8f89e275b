#include "dragwarp/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "dragwarp/errors.hpp"

namespace dragwarp {

namespace {

Bytes encode_raw(const std::uint8_t* pixels, int width, int height, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(width);
  image.height = png_uint_32(height);
  image.format = format;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

Bytes decode_raw(std::span<const std::uint8_t> bytes, png_uint_32 format, int& width, int& height) {
  if (bytes.empty()) throw InvalidInput("empty PNG payload");
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw InvalidInput(std::string("not a decodable PNG: ") + image.message);
  }
  if (image.width < 1 || image.height < 1 || image.width > png_uint_32(kMaxImageSide) ||
      image.height > png_uint_32(kMaxImageSide)) {
    png_image_free(&image);
    throw InvalidInput("PNG dimensions " + std::to_string(image.width) + "x" +
                       std::to_string(image.height) + " exceed " + std::to_string(kMaxImageSide));
  }
  image.format = format;
  Bytes pixels(PNG_IMAGE_SIZE(image));
  // Black background for any alpha channel.
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&image, &background, pixels.data(), 0, nullptr)) {
    throw InvalidInput(std::string("truncated or corrupt PNG: ") + image.message);
  }
  width = int(image.width);
  height = int(image.height);
  return pixels;
}

// Area-overlap resample of interleaved 8-bit channels, separable.
Bytes resample(const std::uint8_t* src, int w, int h, int channels, int nw, int nh) {
  auto axis_weights = [](int from, int to) {
    // For each output index, list of (input index, weight) with weights summing to 1.
    auto table = std::vector<std::vector<std::pair<int, double>>>(std::size_t(to));
    const double scale = double(from) / double(to);
    for (int o = 0; o < to; ++o) {
      const double lo = o * scale;
      const double hi = (o + 1) * scale;
      for (int i = int(std::floor(lo)); i < std::min(from, int(std::ceil(hi))); ++i) {
        const double overlap = std::min(hi, double(i + 1)) - std::max(lo, double(i));
        if (overlap > 0.0) table[std::size_t(o)].emplace_back(i, overlap / scale);
      }
    }
    return table;
  };
  const auto wx = axis_weights(w, nw);
  const auto wy = axis_weights(h, nh);

  std::vector<double> rows(std::size_t(nw) * h * channels, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < nw; ++x) {
      for (const auto& [i, weight] : wx[std::size_t(x)]) {
        for (int c = 0; c < channels; ++c) {
          rows[(std::size_t(y) * nw + x) * channels + c] +=
              weight * src[(std::size_t(y) * w + i) * channels + c];
        }
      }
    }
  }
  Bytes out(std::size_t(nw) * nh * channels);
  for (int y = 0; y < nh; ++y) {
    for (int x = 0; x < nw; ++x) {
      for (int c = 0; c < channels; ++c) {
        double v = 0.0;
        for (const auto& [j, weight] : wy[std::size_t(y)]) {
          v += weight * rows[(std::size_t(j) * nw + x) * channels + c];
        }
        out[(std::size_t(y) * nw + x) * channels + c] =
            std::uint8_t(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

Bytes encode_png(const ImageBuffer& image) {
  return encode_raw(image.data(), image.width(), image.height(), PNG_FORMAT_RGB);
}

Bytes encode_png(const BinaryMask& mask) {
  BinaryMask::Storage gray = mask.bits() * std::uint8_t(255);
  return encode_raw(gray.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

ImageBuffer decode_png_image(std::span<const std::uint8_t> bytes) {
  int width = 0;
  int height = 0;
  Bytes pixels = decode_raw(bytes, PNG_FORMAT_RGB, width, height);
  return ImageBuffer(width, height, std::move(pixels));
}

BinaryMask decode_png_mask(std::span<const std::uint8_t> bytes) {
  int width = 0;
  int height = 0;
  Bytes gray = decode_raw(bytes, PNG_FORMAT_GRAY, width, height);
  BinaryMask mask(width, height);
  for (std::size_t i = 0; i < gray.size(); ++i) mask.data()[i] = gray[i] > 127 ? 1 : 0;
  return mask;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::random_device rd;
  const auto tmp = path.parent_path() / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ImageBuffer resize_image(const ImageBuffer& image, int width, int height) {
  if (width == image.width() && height == image.height()) return image;
  Bytes pixels = resample(image.data(), image.width(), image.height(), 3, width, height);
  return ImageBuffer(width, height, std::move(pixels));
}

ImageBuffer resize_long_edge(const ImageBuffer& image, int long_edge) {
  if (long_edge < 1) throw InvalidInput("resize target must be >= 1");
  const int longest = std::max(image.width(), image.height());
  const double scale = double(long_edge) / double(longest);
  const int w = std::max(1, int(std::lround(image.width() * scale)));
  const int h = std::max(1, int(std::lround(image.height() * scale)));
  return resize_image(image, w, h);
}

BinaryMask resize_mask(const BinaryMask& mask, int width, int height) {
  if (width == mask.width() && height == mask.height()) return mask;
  BinaryMask::Storage gray = mask.bits() * std::uint8_t(255);
  Bytes out = resample(gray.data(), mask.width(), mask.height(), 1, width, height);
  BinaryMask result(width, height);
  for (std::size_t i = 0; i < out.size(); ++i) result.data()[i] = out[i] > 127 ? 1 : 0;
  return result;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t(bytes[i]) << 16) | (std::uint32_t(bytes[i + 1]) << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = std::uint32_t(bytes[i]) << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (std::uint32_t(bytes[i]) << 16) | (std::uint32_t(bytes[i + 1]) << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

Bytes base64_decode(std::string_view text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (int i = 0; i < 64; ++i) lookup[std::uint8_t(kAlphabet[i])] = i;

  Bytes out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    if (ch == '\n' || ch == '\r') continue;
    const int v = lookup[std::uint8_t(ch)];
    if (v < 0) throw InvalidInput("invalid base64 character");
    acc = (acc << 6) | std::uint32_t(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(std::uint8_t((acc >> bits) & 0xFF));
    }
  }
  return out;
}

}  // namespace dragwarp

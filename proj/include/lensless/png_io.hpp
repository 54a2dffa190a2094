#pragma once

#include <filesystem>
#include <vector>

#include "lensless/types.hpp"

namespace lensless {

// Raw integer sample values (0..255 or 0..65535) per channel.
struct PngImage {
  std::vector<Image> channels;
  int bit_depth = 8;

  double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

PngImage read_png(const std::filesystem::path& path);

// Gray or RGB depending on the channel count; values are clamped to [0, 1] then quantized.
void write_png(const std::filesystem::path& path, const std::vector<Image>& channels, int bit_depth = 8);

// Writes raw 16-bit integer samples (clamped to 0..65535).
void write_png16_raw(const std::filesystem::path& path, const Image& values);

// Linearly maps [min, max] of `img` onto [0, 1] for previews.
Image normalize_for_display(const Image& img);

}  // namespace lensless

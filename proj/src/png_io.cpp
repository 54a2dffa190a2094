#include "lensless/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace lensless {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void write_raw(const std::filesystem::path& path, const std::vector<Image>& channels, int bit_depth, bool raw) {
  if (channels.size() != 1 && channels.size() != 3) throw std::invalid_argument("PNG needs 1 or 3 channels");
  const int rows = static_cast<int>(channels[0].rows()), cols = static_cast<int>(channels[0].cols());
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, f.get());
  const int color = channels.size() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, cols, rows, bit_depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const double top = bit_depth == 16 ? 65535.0 : 255.0;
  const int bytes = bit_depth / 8;
  std::vector<png_byte> row(static_cast<std::size_t>(cols) * channels.size() * bytes);
  for (int r = 0; r < rows; ++r) {
    std::size_t p = 0;
    for (int c = 0; c < cols; ++c)
      for (const auto& ch : channels) {
        const double v = raw ? ch(r, c) : ch(r, c) * top;
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, top)));
        if (bytes == 2) row[p++] = static_cast<png_byte>(q >> 8);
        row[p++] = static_cast<png_byte>(q & 0xff);
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

PngImage read_png(const std::filesystem::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng failed reading " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth < 8) depth = 8;
  png_read_update_info(png, info);
  const int rows = static_cast<int>(png_get_image_height(png, info));
  const int cols = static_cast<int>(png_get_image_width(png, info));
  const int nch = png_get_channels(png, info);
  std::vector<png_byte> buffer(png_get_rowbytes(png, info) * rows);
  std::vector<png_bytep> pointers(rows);
  for (int r = 0; r < rows; ++r) pointers[r] = buffer.data() + r * png_get_rowbytes(png, info);
  png_read_image(png, pointers.data());
  png_destroy_read_struct(&png, &info, nullptr);

  PngImage out;
  out.bit_depth = depth;
  out.channels.assign(nch, Image(rows, cols));
  const int bytes = depth / 8;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int ch = 0; ch < nch; ++ch) {
        const png_byte* p = pointers[r] + (static_cast<std::size_t>(c) * nch + ch) * bytes;
        out.channels[ch](r, c) = bytes == 2 ? (p[0] << 8 | p[1]) : p[0];
      }
  return out;
}

void write_png(const std::filesystem::path& path, const std::vector<Image>& channels, int bit_depth) {
  write_raw(path, channels, bit_depth, false);
}

void write_png16_raw(const std::filesystem::path& path, const Image& values) {
  write_raw(path, {values}, 16, true);
}

Image normalize_for_display(const Image& img) {
  const double lo = img.minCoeff(), hi = img.maxCoeff();
  if (!(hi > lo)) return Image::Zero(img.rows(), img.cols());
  return (img - lo) / (hi - lo);
}

}  // namespace lensless

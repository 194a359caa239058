#include "dpct/io/png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "dpct/core/error.hpp"

namespace dpct::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void on_png_error(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

}  // namespace

PngImage read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw LoadError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError(path.string() + " is not a PNG file");

  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw LoadError("libpng initialisation failed");

  PngImage out;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // host order is little-endian on supported targets
  png_read_update_info(png, info);

  out.cols = static_cast<int>(png_get_image_width(png, info));
  out.rows = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  if (out.channels != 1 && out.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": unsupported channel layout");
  }
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * out.rows);
  rows.resize(out.rows);
  for (int r = 0; r < out.rows; ++r) rows[r] = buffer.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t per_row = static_cast<std::size_t>(out.cols) * out.channels;
  out.samples.resize(per_row * out.rows);
  for (int r = 0; r < out.rows; ++r) {
    auto dst = out.samples.begin() + static_cast<std::ptrdiff_t>(r * per_row);
    if (out.bit_depth == 16)
      std::copy_n(reinterpret_cast<const std::uint16_t*>(rows[r]), per_row, dst);
    else
      std::copy_n(rows[r], per_row, dst);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const PngImage& img) {
  require(img.channels == 1 || img.channels == 3, "write_png: 1 or 3 channels");
  require(img.bit_depth == 8 || img.bit_depth == 16, "write_png: bit depth must be 8 or 16");
  require(img.samples.size() == static_cast<std::size_t>(img.rows) * img.cols * img.channels,
          "write_png: sample count mismatch");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw LoadError("cannot open " + path.string() + " for writing");

  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw LoadError("libpng initialisation failed");

  const int bytes_per_sample = img.bit_depth / 8;
  const std::size_t rowbytes = static_cast<std::size_t>(img.cols) * img.channels * bytes_per_sample;
  std::vector<unsigned char> buffer(rowbytes * img.rows);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (bytes_per_sample == 1) {
      buffer[i] = static_cast<unsigned char>(std::min<std::uint16_t>(img.samples[i], 255));
    } else {  // PNG stores 16-bit samples big-endian
      buffer[2 * i] = static_cast<unsigned char>(img.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<unsigned char>(img.samples[i] & 0xFF);
    }
  }
  std::vector<png_bytep> rows(img.rows);
  for (int r = 0; r < img.rows; ++r) rows[r] = buffer.data() + r * rowbytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw LoadError("failed writing PNG " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.cols, img.rows, img.bit_depth,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_gray8(const std::filesystem::path& path, int rows, int cols, const std::vector<double>& unit_values) {
  PngImage img;
  img.rows = rows;
  img.cols = cols;
  img.channels = 1;
  img.bit_depth = 8;
  img.samples.resize(unit_values.size());
  for (std::size_t i = 0; i < unit_values.size(); ++i)
    img.samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(unit_values[i], 0.0, 1.0) * 255.0));
  write_png(path, img);
}

}  // namespace dpct::io

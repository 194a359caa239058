#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace dpct::io {

struct PngImage {
  int rows = 0;
  int cols = 0;
  int channels = 1;    // 1 = gray, 3 = RGB
  int bit_depth = 8;   // 8 or 16
  std::vector<std::uint16_t> samples;  // row-major, interleaved channels
};

/// Reads an 8- or 16-bit gray or RGB PNG. Throws LoadError / FormatError.
PngImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const PngImage& img);

/// Gray8 from values in [0, 1] (clamped, rounded).
void write_gray8(const std::filesystem::path& path, int rows, int cols, const std::vector<double>& unit_values);

}  // namespace dpct::io

#pragma once

#include <string>

#include "dpct/core/tensor.hpp"

namespace dpct::data {

inline constexpr double kMinHu = -1024.0;
inline constexpr double kMaxHu = 3071.0;
inline constexpr int kMinSliceExtent = 16;

/// A CT slice in Hounsfield units.
struct CTSlice {
  Image pixels;
  std::string patient_id;
  int slice_index = 0;

  int rows() const { return pixels.rows(); }
  int cols() const { return pixels.cols(); }
};

/// Throws ArgumentError unless extent >= 16x16 and every value is finite and inside [-1024, 3071].
void validate(const CTSlice& slice);

/// Builds a validated slice after clamping to the HU range. Non-finite pixels are rejected.
CTSlice make_slice(Image hu, std::string patient_id, int slice_index);

struct PairedSample {
  CTSlice ldct;
  CTSlice hdct;
};

/// Throws ArgumentError when the two members disagree on shape, patient or slice index.
void validate(const PairedSample& pair);

/// Linear map of [lo, hi] to [0, 1] with clamping.
Image hu_window(const Image& hu, double lo, double hi);
inline Image hu_window(const CTSlice& s, double lo, double hi) { return hu_window(s.pixels, lo, hi); }

/// Display window used for qualitative figures.
inline constexpr double kDisplayLo = -160.0;
inline constexpr double kDisplayHi = 240.0;

/// Network-facing intensity scale: the full HU range mapped linearly onto [0, 1].
Image hu_to_unit(const Image& hu);
Image unit_to_hu(const Image& unit);

inline constexpr double kMuWaterPerMm = 0.0195;

/// mu = mu_water * (1 + HU / 1000), floored at zero.
Image hu_to_attenuation(const Image& hu, double mu_water = kMuWaterPerMm);
Image attenuation_to_hu(const Image& mu, double mu_water = kMuWaterPerMm);

}  // namespace dpct::data

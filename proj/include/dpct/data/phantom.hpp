#pragma once

#include <cstdint>

#include "dpct/core/tensor.hpp"

namespace dpct::data {

/// Uniform disk of `value` on a background of `background`, centred in the frame.
Image disk_phantom(int rows, int cols, double radius, double value, double background = 0.0);

/// Randomized anatomy-like HU slice: air background, an elliptical body of soft
/// tissue, lung fields, bone and a few low-contrast lesions. Deterministic in `seed`.
Image body_phantom(int rows, int cols, std::uint64_t seed);

}  // namespace dpct::data

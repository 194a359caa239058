#pragma once

#include <cstdint>
#include <vector>

#include "dpct/core/tensor.hpp"

namespace dpct::data {

/// Parallel-beam projections. values(a, d) is the line integral for angle `a`
/// and detector bin `d`; bins are spaced one pixel apart and centred on the image.
struct Sinogram {
  Image values;                 // n_angles x n_detectors
  std::vector<double> angles;   // radians, one per row of `values`
  double pixel_spacing_mm = 1.0;

  int n_angles() const { return values.rows(); }
  int n_detectors() const { return values.cols(); }
};

struct NoiseModelConfig {
  double incident_photons = 1.0e5;  // I0 per detector bin
  double electronic_sigma = 0.0;    // in counts
  std::uint64_t seed = 0;
  double log_floor = 0.1;           // counts floor before -ln
};

/// Number of detector bins used for an H x W image: covers the diagonal and
/// matches the parity of W so that angle 0 lines up with pixel columns.
int detector_count(int rows, int cols);

/// Evenly spaced angles over [0, pi).
std::vector<double> parallel_angles(int n_angles);

/// Discretized line integrals of a non-negative attenuation image (mm^-1),
/// sampled every half pixel with bilinear interpolation.
Sinogram radon_forward(const Image& attenuation, int n_angles, double pixel_spacing_mm = 1.0);

/// Detector counts N = Poisson(I0 * exp(-p)) + Normal(0, sigma^2).
Image simulate_counts(const Sinogram& sino, const NoiseModelConfig& cfg);

/// p_hat = -ln(max(N, floor) / I0) with N from simulate_counts.
Sinogram inject_ld_noise(const Sinogram& sino, const NoiseModelConfig& cfg);

/// Ram-Lak filtered backprojection onto an H x W grid. Linear in the sinogram.
/// Throws ArgumentError when the detector grid does not match the requested shape.
Image fbp_reconstruct(const Sinogram& sino, int rows, int cols);

}  // namespace dpct::data

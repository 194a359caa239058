#include "dpct/data/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dpct/core/rng.hpp"

namespace dpct::data {

namespace {

constexpr double kRayStep = 0.5;  // pixels

double bilinear_zero(const Image& img, double row, double col) {
  const double r0f = std::floor(row), c0f = std::floor(col);
  const int r0 = static_cast<int>(r0f), c0 = static_cast<int>(c0f);
  const double fr = row - r0f, fc = col - c0f;
  auto at = [&](int r, int c) {
    return (r >= 0 && r < img.rows() && c >= 0 && c < img.cols()) ? img(r, c) : 0.0;
  };
  return (1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) + fr * ((1 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
}

}  // namespace

int detector_count(int rows, int cols) {
  int n = static_cast<int>(std::ceil(std::hypot(rows, cols))) + 2;
  if ((n - cols) % 2 != 0) ++n;
  return n;
}

std::vector<double> parallel_angles(int n_angles) {
  std::vector<double> a(static_cast<std::size_t>(n_angles));
  for (int i = 0; i < n_angles; ++i) a[i] = std::numbers::pi * i / n_angles;
  return a;
}

Sinogram radon_forward(const Image& attenuation, int n_angles, double pixel_spacing_mm) {
  require(n_angles >= 1, "radon_forward: n_angles must be >= 1");
  require(!attenuation.empty(), "radon_forward: empty image");
  require(pixel_spacing_mm > 0, "radon_forward: pixel spacing must be positive");
  const int rows = attenuation.rows(), cols = attenuation.cols();
  const int ndet = detector_count(rows, cols);
  const double cx = 0.5 * (cols - 1), cy = 0.5 * (rows - 1);
  const double tc = 0.5 * (ndet - 1);
  // Half-length of every ray, rounded to the step grid so samples stay pixel-aligned at angle 0.
  const int half_steps = static_cast<int>(std::ceil(0.5 * std::hypot(rows, cols) / kRayStep)) + 2;

  Sinogram s;
  s.angles = parallel_angles(n_angles);
  s.pixel_spacing_mm = pixel_spacing_mm;
  s.values = Image(n_angles, ndet);
  for (int a = 0; a < n_angles; ++a) {
    const double ct = std::cos(s.angles[a]), st = std::sin(s.angles[a]);
    for (int d = 0; d < ndet; ++d) {
      const double t = d - tc;
      double acc = 0.0;
      for (int k = -half_steps; k <= half_steps; ++k) {
        const double u = k * kRayStep;
        // detector axis (cos, sin); ray direction (-sin, cos); x = column offset, y = row offset
        const double x = t * ct - u * st;
        const double y = t * st + u * ct;
        acc += bilinear_zero(attenuation, cy + y, cx + x);
      }
      s.values(a, d) = acc * kRayStep * pixel_spacing_mm;
    }
  }
  return s;
}

Image simulate_counts(const Sinogram& sino, const NoiseModelConfig& cfg) {
  require(cfg.incident_photons > 0, "inject_ld_noise: incident photon count must be positive");
  require(cfg.electronic_sigma >= 0, "inject_ld_noise: electronic sigma must be non-negative");
  Rng rng = make_rng(cfg.seed, 0x5107);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Image counts(sino.n_angles(), sino.n_detectors());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double p = sino.values.data()[i];
    require(p >= 0.0 && std::isfinite(p), "inject_ld_noise: line integrals must be finite and non-negative");
    const double mean = cfg.incident_photons * std::exp(-p);
    std::poisson_distribution<long long> poisson(mean);
    double n = mean > 0 ? static_cast<double>(poisson(rng)) : 0.0;
    if (cfg.electronic_sigma > 0) n += cfg.electronic_sigma * gauss(rng);
    counts.data()[i] = n;
  }
  return counts;
}

Sinogram inject_ld_noise(const Sinogram& sino, const NoiseModelConfig& cfg) {
  require(cfg.log_floor > 0, "inject_ld_noise: log floor must be positive");
  const Image counts = simulate_counts(sino, cfg);
  Sinogram out = sino;
  for (std::size_t i = 0; i < counts.size(); ++i)
    out.values.data()[i] = -std::log(std::max(counts.data()[i], cfg.log_floor) / cfg.incident_photons);
  return out;
}

Image fbp_reconstruct(const Sinogram& sino, int rows, int cols) {
  require(rows > 0 && cols > 0, "fbp_reconstruct: output shape must be positive");
  require(sino.n_angles() >= 1 && static_cast<int>(sino.angles.size()) == sino.n_angles(),
          "fbp_reconstruct: angle list does not match sinogram rows");
  const int ndet = sino.n_detectors();
  require(ndet == detector_count(rows, cols), "fbp_reconstruct: detector grid does not match output shape");
  const int na = sino.n_angles();

  // Ram-Lak kernel sampled at unit detector spacing.
  std::vector<double> kernel(2 * ndet - 1, 0.0);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int n = -(ndet - 1); n <= ndet - 1; ++n) {
    double h = 0.0;
    if (n == 0) h = 0.25;
    else if (n % 2 != 0) h = -1.0 / (pi2 * n * n);
    kernel[n + ndet - 1] = h;
  }

  Image filtered(na, ndet);
  for (int a = 0; a < na; ++a)
    for (int d = 0; d < ndet; ++d) {
      double acc = 0.0;
      for (int k = 0; k < ndet; ++k) acc += sino.values(a, k) * kernel[d - k + ndet - 1];
      filtered(a, d) = acc;
    }

  const double cx = 0.5 * (cols - 1), cy = 0.5 * (rows - 1), tc = 0.5 * (ndet - 1);
  const double norm = std::numbers::pi / na / sino.pixel_spacing_mm;
  Image out(rows, cols);
  for (int a = 0; a < na; ++a) {
    const double ct = std::cos(sino.angles[a]), st = std::sin(sino.angles[a]);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double t = (c - cx) * ct + (r - cy) * st + tc;
        const double tf = std::floor(t);
        const int i0 = static_cast<int>(tf);
        if (i0 < 0 || i0 + 1 >= ndet) {
          if (i0 == ndet - 1) out(r, c) += filtered(a, i0);
          continue;
        }
        const double f = t - tf;
        out(r, c) += filtered(a, i0) + f * (filtered(a, i0 + 1) - filtered(a, i0));
      }
  }
  for (double& v : out.data()) v *= norm;
  return out;
}

}  // namespace dpct::data

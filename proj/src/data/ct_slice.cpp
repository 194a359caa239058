#include "dpct/data/ct_slice.hpp"

#include <algorithm>
#include <cmath>

namespace dpct::data {

void validate(const CTSlice& slice) {
  require(slice.rows() >= kMinSliceExtent && slice.cols() >= kMinSliceExtent,
          "CTSlice: extent must be at least 16x16");
  for (double v : slice.pixels.pixels()) {
    require(std::isfinite(v), "CTSlice: non-finite pixel");
    require(v >= kMinHu && v <= kMaxHu, "CTSlice: HU value outside [-1024, 3071]");
  }
}

CTSlice make_slice(Image hu, std::string patient_id, int slice_index) {
  require(hu.all_finite(), "CTSlice: non-finite pixel");
  for (double& v : hu.data()) v = std::clamp(v, kMinHu, kMaxHu);
  CTSlice s{std::move(hu), std::move(patient_id), slice_index};
  validate(s);
  return s;
}

void validate(const PairedSample& pair) {
  require(pair.ldct.pixels.same_shape(pair.hdct.pixels), "PairedSample: shapes differ");
  require(pair.ldct.patient_id == pair.hdct.patient_id, "PairedSample: patient ids differ");
  require(pair.ldct.slice_index == pair.hdct.slice_index, "PairedSample: slice indices differ");
}

Image hu_window(const Image& hu, double lo, double hi) {
  require(lo < hi, "hu_window: lo must be below hi");
  Image out(hu.rows(), hu.cols());
  const double inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < hu.size(); ++i) out.data()[i] = std::clamp((hu.data()[i] - lo) * inv, 0.0, 1.0);
  return out;
}

Image hu_to_unit(const Image& hu) {
  Image out(hu.rows(), hu.cols());
  for (std::size_t i = 0; i < hu.size(); ++i) out.data()[i] = (hu.data()[i] - kMinHu) / (kMaxHu - kMinHu);
  return out;
}

Image unit_to_hu(const Image& unit) {
  Image out(unit.rows(), unit.cols());
  for (std::size_t i = 0; i < unit.size(); ++i) out.data()[i] = kMinHu + unit.data()[i] * (kMaxHu - kMinHu);
  return out;
}

Image hu_to_attenuation(const Image& hu, double mu_water) {
  Image out(hu.rows(), hu.cols());
  for (std::size_t i = 0; i < hu.size(); ++i) out.data()[i] = std::max(0.0, mu_water * (1.0 + hu.data()[i] / 1000.0));
  return out;
}

Image attenuation_to_hu(const Image& mu, double mu_water) {
  Image out(mu.rows(), mu.cols());
  for (std::size_t i = 0; i < mu.size(); ++i) out.data()[i] = 1000.0 * (mu.data()[i] / mu_water - 1.0);
  return out;
}

}  // namespace dpct::data

#pragma once

#include <cstdint>
#include <filesystem>

#include "dpct/data/ct_slice.hpp"
#include "dpct/data/dataset.hpp"
#include "dpct/data/tomography.hpp"
#include "json.hpp"

namespace dpct::data {

/// Default incident photons per detector bin for the quarter-dose arm.
inline constexpr double kDefaultQuarterDosePhotons = 1.0e5;  // ~30 dB on 512x512 slices at 1 mm spacing

struct SimulationConfig {
  NoiseModelConfig noise{kDefaultQuarterDosePhotons, 0.0, 0, 0.1};
  int n_angles = 360;
  double pixel_spacing_mm = 1.0;
  double mu_water = kMuWaterPerMm;
};

nlohmann::json to_json(const SimulationConfig& cfg);

/// Low-dose counterpart of a high-dose slice. The projection-domain noise
/// (noisy minus clean line integrals) is reconstructed by FBP and added to the
/// high-dose image, so the pair differs only by dose-related noise.
/// The random stream is derived from (seed, patient_id, slice_index).
CTSlice simulate_low_dose(const CTSlice& hdct, const SimulationConfig& cfg);

/// Runs simulate_low_dose over every manifest slice and writes
/// <out>/<patient>/{hd,ld}_NNNN.png, <out>/manifest.json and <out>/provenance.json.
DatasetManifest simulate_dataset(const DatasetManifest& source, const SimulationConfig& cfg,
                                 const std::filesystem::path& out_dir);

/// Synthetic high-dose dataset of body phantoms (for smoke runs without clinical data).
DatasetManifest make_phantom_dataset(int n_patients, int slices_per_patient, int rows, int cols, std::uint64_t seed,
                                     const std::filesystem::path& out_dir);

}  // namespace dpct::data

#include "dpct/data/simulate.hpp"

#include <cstdio>
#include <fstream>
#include <functional>

#include "dpct/core/rng.hpp"
#include "dpct/data/phantom.hpp"
#include "dpct/data/slice_io.hpp"

namespace dpct::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t slice_stream(const std::string& patient_id, int slice_index) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : patient_id) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return derive_seed(h, static_cast<std::uint64_t>(slice_index));
}

std::string numbered(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d.png", prefix, index);
  return buf;
}

}  // namespace

json to_json(const SimulationConfig& cfg) {
  return {{"incident_photons", cfg.noise.incident_photons},
          {"electronic_sigma", cfg.noise.electronic_sigma},
          {"seed", cfg.noise.seed},
          {"log_floor", cfg.noise.log_floor},
          {"n_angles", cfg.n_angles},
          {"pixel_spacing_mm", cfg.pixel_spacing_mm},
          {"mu_water_per_mm", cfg.mu_water},
          {"geometry", "parallel-beam"}};
}

CTSlice simulate_low_dose(const CTSlice& hdct, const SimulationConfig& cfg) {
  validate(hdct);
  const Image mu = hu_to_attenuation(hdct.pixels, cfg.mu_water);
  const Sinogram clean = radon_forward(mu, cfg.n_angles, cfg.pixel_spacing_mm);

  NoiseModelConfig noise = cfg.noise;
  noise.seed = derive_seed(cfg.noise.seed, slice_stream(hdct.patient_id, hdct.slice_index));
  Sinogram delta = inject_ld_noise(clean, noise);
  for (std::size_t i = 0; i < delta.values.size(); ++i) delta.values.data()[i] -= clean.values.data()[i];

  const Image dmu = fbp_reconstruct(delta, hdct.rows(), hdct.cols());
  Image ld = hdct.pixels;
  for (std::size_t i = 0; i < ld.size(); ++i) ld.data()[i] += 1000.0 * dmu.data()[i] / cfg.mu_water;
  return make_slice(std::move(ld), hdct.patient_id, hdct.slice_index);
}

DatasetManifest simulate_dataset(const DatasetManifest& source, const SimulationConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  DatasetManifest out;
  out.root = out_dir;
  out.provenance = {{"noise_model", to_json(cfg)}, {"source_root", source.root.generic_string()}};
  for (const auto& p : source.patients) {
    PatientEntry pe{p.patient_id, {}};
    for (const auto& s : p.slices) {
      CTSlice hd = load_slice(source.resolve(s.hdct));
      hd.patient_id = p.patient_id;
      hd.slice_index = s.slice_index;
      const CTSlice ld = simulate_low_dose(hd, cfg);
      SliceEntry se{s.slice_index, (fs::path(p.patient_id) / numbered("hd", s.slice_index)).generic_string(),
                    (fs::path(p.patient_id) / numbered("ld", s.slice_index)).generic_string()};
      save_slice(out_dir / se.hdct, hd);
      save_slice(out_dir / se.ldct, ld);
      pe.slices.push_back(std::move(se));
    }
    out.patients.push_back(std::move(pe));
  }
  save_manifest(out_dir / "manifest.json", out);
  std::ofstream prov(out_dir / "provenance.json", std::ios::trunc);
  prov << out.provenance.dump(2) << "\n";
  return out;
}

DatasetManifest make_phantom_dataset(int n_patients, int slices_per_patient, int rows, int cols, std::uint64_t seed,
                                     const fs::path& out_dir) {
  require(n_patients >= 1 && slices_per_patient >= 1, "make_phantom_dataset: counts must be positive");
  fs::create_directories(out_dir);
  DatasetManifest m;
  m.root = out_dir;
  m.provenance = {{"generator", "body_phantom"}, {"seed", seed}, {"rows", rows}, {"cols", cols}};
  for (int p = 0; p < n_patients; ++p) {
    char pid[16];
    std::snprintf(pid, sizeof pid, "P%03d", p);
    PatientEntry pe{pid, {}};
    for (int s = 0; s < slices_per_patient; ++s) {
      const std::uint64_t sseed = derive_seed(seed, static_cast<std::uint64_t>(p) * 100003 + s);
      CTSlice hd = make_slice(body_phantom(rows, cols, sseed), pid, s);
      SliceEntry se{s, (fs::path(pid) / numbered("hd", s)).generic_string(), {}};
      save_slice(out_dir / se.hdct, hd);
      pe.slices.push_back(std::move(se));
    }
    m.patients.push_back(std::move(pe));
  }
  save_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace dpct::data

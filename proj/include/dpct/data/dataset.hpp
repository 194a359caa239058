#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dpct/data/ct_slice.hpp"
#include "json.hpp"

namespace dpct::data {

struct SliceEntry {
  int slice_index = 0;
  std::string hdct;  // path relative to the manifest root
  std::string ldct;  // may be empty before simulation
};

struct PatientEntry {
  std::string patient_id;
  std::vector<SliceEntry> slices;
};

/// JSON manifest:
/// {"root": ".", "patients": [{"patient_id": "L067", "slices": [{"slice_index": 0,
///   "hdct": "L067/hd_0000.png", "ldct": "L067/ld_0000.png"}]}], "provenance": {...}}
/// `root` is resolved against the manifest's own directory.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<PatientEntry> patients;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t pair_count() const;
  std::filesystem::path resolve(const std::string& rel) const { return root / rel; }
};

DatasetManifest load_manifest(const std::filesystem::path& path);
/// Writes paths relative to the manifest directory.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct PairRef {
  std::string patient_id;
  int slice_index = 0;
  std::filesystem::path hdct;
  std::filesystem::path ldct;
};

struct DatasetSplit {
  std::vector<std::string> trainval_patients;
  std::vector<std::string> test_patients;
  std::vector<PairRef> train;
  std::vector<PairRef> val;
  std::vector<PairRef> test;
};

/// Holds out 20% of patients (at least one) for testing, then assigns 20% of the
/// remaining pairs to validation. Deterministic in `seed`.
DatasetSplit split_dataset(const DatasetManifest& manifest, std::uint64_t seed);

PairedSample load_pair(const PairRef& ref);

struct PatchPair {
  int row = 0;
  int col = 0;
  PairedSample pair;
};

/// Co-located square crops. `size` must be a positive multiple of 16 no larger than the image.
std::vector<PatchPair> patch_sample(const PairedSample& pair, int size, int count, std::uint64_t seed);

Image crop(const Image& img, int row, int col, int rows, int cols);

}  // namespace dpct::data

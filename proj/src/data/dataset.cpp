#include "dpct/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "dpct/core/rng.hpp"
#include "dpct/data/slice_io.hpp"

namespace dpct::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t DatasetManifest::pair_count() const {
  std::size_t n = 0;
  for (const auto& p : patients) n += p.slices.size();
  return n;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open manifest " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    m.root = base / j.value("root", std::string("."));
    m.provenance = j.value("provenance", json::object());
    for (const auto& p : j.at("patients")) {
      PatientEntry pe;
      pe.patient_id = p.at("patient_id").get<std::string>();
      for (const auto& s : p.at("slices")) {
        SliceEntry se;
        se.slice_index = s.value("slice_index", static_cast<int>(pe.slices.size()));
        se.hdct = s.value("hdct", std::string());
        se.ldct = s.value("ldct", std::string());
        pe.slices.push_back(std::move(se));
      }
      m.patients.push_back(std::move(pe));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  json j;
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  j["root"] = fs::relative(manifest.root, base).generic_string();
  if (j["root"].get<std::string>().empty()) j["root"] = ".";
  j["provenance"] = manifest.provenance;
  j["patients"] = json::array();
  for (const auto& p : manifest.patients) {
    json pj{{"patient_id", p.patient_id}, {"slices", json::array()}};
    for (const auto& s : p.slices) {
      json sj{{"slice_index", s.slice_index}, {"hdct", s.hdct}};
      if (!s.ldct.empty()) sj["ldct"] = s.ldct;
      pj["slices"].push_back(std::move(sj));
    }
    j["patients"].push_back(std::move(pj));
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot write manifest " + path.string());
  out << j.dump(2) << "\n";
}

DatasetSplit split_dataset(const DatasetManifest& manifest, std::uint64_t seed) {
  require(manifest.patients.size() >= 3, "split_dataset: at least 3 patients are required");
  std::vector<std::size_t> order(manifest.patients.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = make_rng(seed, 0x5B17);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n = order.size();
  const std::size_t n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * n)));
  DatasetSplit split;
  std::vector<PairRef> trainval;
  for (std::size_t k = 0; k < n; ++k) {
    const PatientEntry& p = manifest.patients[order[k]];
    const bool is_test = k >= n - n_test;
    (is_test ? split.test_patients : split.trainval_patients).push_back(p.patient_id);
    for (const auto& s : p.slices) {
      PairRef ref{p.patient_id, s.slice_index, manifest.resolve(s.hdct),
                  s.ldct.empty() ? fs::path() : manifest.resolve(s.ldct)};
      (is_test ? split.test : trainval).push_back(std::move(ref));
    }
  }
  std::shuffle(trainval.begin(), trainval.end(), rng);
  const std::size_t n_val = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(trainval.size())));
  split.val.assign(trainval.begin(), trainval.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(trainval.begin() + static_cast<std::ptrdiff_t>(n_val), trainval.end());
  return split;
}

PairedSample load_pair(const PairRef& ref) {
  require(!ref.ldct.empty(), "load_pair: entry has no low-dose slice; run simulate first");
  PairedSample p{load_slice(ref.ldct), load_slice(ref.hdct)};
  p.ldct.patient_id = p.hdct.patient_id = ref.patient_id;
  p.ldct.slice_index = p.hdct.slice_index = ref.slice_index;
  validate(p);
  return p;
}

Image crop(const Image& img, int row, int col, int rows, int cols) {
  require(row >= 0 && col >= 0 && row + rows <= img.rows() && col + cols <= img.cols(), "crop: window out of bounds");
  Image out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = img(row + r, col + c);
  return out;
}

std::vector<PatchPair> patch_sample(const PairedSample& pair, int size, int count, std::uint64_t seed) {
  validate(pair);
  require(size > 0 && size % 16 == 0, "patch_sample: size must be a positive multiple of 16");
  require(size <= std::min(pair.hdct.rows(), pair.hdct.cols()), "patch_sample: size exceeds the image extent");
  require(count >= 0, "patch_sample: negative count");
  Rng rng = make_rng(seed, 0x9A7C);
  std::uniform_int_distribution<int> rdist(0, pair.hdct.rows() - size), cdist(0, pair.hdct.cols() - size);
  std::vector<PatchPair> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int r = rdist(rng), c = cdist(rng);
    PatchPair pp{r, c, {}};
    pp.pair.ldct = {crop(pair.ldct.pixels, r, c, size, size), pair.ldct.patient_id, pair.ldct.slice_index};
    pp.pair.hdct = {crop(pair.hdct.pixels, r, c, size, size), pair.hdct.patient_id, pair.hdct.slice_index};
    out.push_back(std::move(pp));
  }
  return out;
}

}  // namespace dpct::data

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace dpct::io {

struct TensorRecord {
  std::vector<int> shape;
  std::vector<double> values;
};

/// Named float64 tensors plus a JSON metadata block.
///
/// On-disk layout (little-endian):
///   8 bytes   magic "DPCTARC1"
///   8 bytes   u64 header length N
///   N bytes   UTF-8 JSON {"meta": {...}, "tensors": [{"name", "shape", "offset", "count"}...]}
///   ...       float64 payload; `offset` and `count` are in elements
struct Archive {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, TensorRecord> tensors;
};

void save_archive(const std::filesystem::path& path, const Archive& archive);
/// Throws LoadError when the file is missing, FormatError when it is malformed.
Archive load_archive(const std::filesystem::path& path);

}  // namespace dpct::io

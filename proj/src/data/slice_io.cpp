#include "dpct/data/slice_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dpct/io/png.hpp"
#include "json.hpp"

namespace dpct::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_sidecar(const fs::path& path, bool required) {
  const fs::path side = sidecar_path(path);
  if (!fs::exists(side)) {
    if (required) throw LoadError("missing sidecar " + side.string());
    return json::object();
  }
  std::ifstream in(side);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(side.string() + ": " + e.what());
  }
}

template <class T>
std::vector<double> read_raw_values(std::ifstream& in, std::size_t n) {
  std::vector<T> buf(n);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(T))))
    throw FormatError("raw payload shorter than rows*cols");
  return std::vector<double>(buf.begin(), buf.end());
}

}  // namespace

fs::path sidecar_path(const fs::path& path) {
  fs::path p = path;
  return p.replace_extension(".json");
}

CTSlice load_slice(const fs::path& path) {
  if (!fs::exists(path)) throw LoadError("slice file not found: " + path.string());
  const std::string ext = path.extension().string();
  std::vector<double> values;
  int rows = 0, cols = 0;
  json meta;

  if (ext == ".png") {
    meta = read_sidecar(path, false);
    const io::PngImage png = io::read_png(path);
    if (png.channels != 1) throw FormatError(path.string() + ": expected a single-channel image");
    rows = png.rows;
    cols = png.cols;
    values.assign(png.samples.begin(), png.samples.end());
  } else if (ext == ".raw") {
    meta = read_sidecar(path, true);
    std::string dtype;
    try {
      if (meta.contains("shape")) {
        const auto shape = meta.at("shape").get<std::vector<int>>();
        if (shape.size() != 2) throw FormatError(path.string() + ": payload is not 2D");
        rows = shape[0];
        cols = shape[1];
      } else {
        rows = meta.at("rows").get<int>();
        cols = meta.at("cols").get<int>();
      }
      dtype = meta.at("dtype").get<std::string>();
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": sidecar lacks rows/cols/dtype: " + e.what());
    }
    if (rows <= 0 || cols <= 0) throw FormatError(path.string() + ": non-positive extent");
    std::ifstream in(path, std::ios::binary);
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    if (dtype == "int16") values = read_raw_values<std::int16_t>(in, n);
    else if (dtype == "uint16") values = read_raw_values<std::uint16_t>(in, n);
    else if (dtype == "float32") values = read_raw_values<float>(in, n);
    else if (dtype == "float64") values = read_raw_values<double>(in, n);
    else throw FormatError(path.string() + ": unsupported dtype " + dtype);
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": payload larger than rows*cols");
  } else {
    throw FormatError(path.string() + ": unsupported slice extension '" + ext + "'");
  }

  const bool png_default = ext == ".png" && !meta.contains("rescale_intercept");
  const double slope = meta.value("rescale_slope", 1.0);
  const double intercept = meta.value("rescale_intercept", png_default ? kMinHu : 0.0);
  for (double& v : values) v = v * slope + intercept;

  Image img(rows, cols, std::move(values));
  if (!img.all_finite()) throw FormatError(path.string() + ": non-finite pixel values");
  std::string pid = meta.value("patient_id", path.parent_path().filename().string());
  const int idx = meta.value("slice_index", 0);
  return make_slice(std::move(img), std::move(pid), idx);
}

void save_slice(const fs::path& path, const CTSlice& slice) {
  const std::string ext = path.extension().string();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  json meta{{"patient_id", slice.patient_id}, {"slice_index", slice.slice_index}};
  if (ext == ".png") {
    io::PngImage png;
    png.rows = slice.rows();
    png.cols = slice.cols();
    png.bit_depth = 16;
    png.samples.resize(slice.pixels.size());
    for (std::size_t i = 0; i < png.samples.size(); ++i) {
      const double hu = std::clamp(slice.pixels.data()[i], kMinHu, kMaxHu);
      png.samples[i] = static_cast<std::uint16_t>(std::lround(hu - kMinHu));
    }
    io::write_png(path, png);
    meta["rescale_slope"] = 1.0;
    meta["rescale_intercept"] = kMinHu;
  } else if (ext == ".raw") {
    std::vector<float> buf(slice.pixels.data().begin(), slice.pixels.data().end());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    meta["rows"] = slice.rows();
    meta["cols"] = slice.cols();
    meta["dtype"] = "float32";
    meta["rescale_slope"] = 1.0;
    meta["rescale_intercept"] = 0.0;
  } else {
    throw ArgumentError("save_slice: unsupported extension '" + ext + "'");
  }
  std::ofstream side(sidecar_path(path), std::ios::trunc);
  side << meta.dump(2) << "\n";
}

}  // namespace dpct::data

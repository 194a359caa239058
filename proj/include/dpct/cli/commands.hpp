#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dpct/core/tensor.hpp"
#include "dpct/data/dataset.hpp"
#include "dpct/data/simulate.hpp"
#include "json.hpp"

namespace dpct::cli {

namespace fs = std::filesystem;

/// Environment variable naming the default data root; `--data` falls back to <root>/manifest.json.
inline constexpr const char* kDataRootEnv = "DPCT_DATA_ROOT";

/// Absolute differences above this many HU saturate the difference map.
inline constexpr double kDiffMapMaxHu = 200.0;

/// |pred - ref| in HU mapped linearly from [0, max_hu] onto [0, 1], clamped. Shapes must match.
Image diff_map(const Image& pred_hu, const Image& ref_hu, double max_hu = kDiffMapMaxHu);

/// Display rendition of an HU image: the [-160, 240] HU window mapped onto [0, 1].
Image display_window(const Image& hu);

/// `{"error": {"kind": ..., "message": ...}}` for any exception (library errors keep their kind).
nlohmann::json error_json(const std::exception& e);

/// Resolves an optional --data argument against DPCT_DATA_ROOT.
fs::path resolve_data(const std::optional<fs::path>& data);

/// Pairs of a manifest restricted to one split: all | train | val | test (patient-level test hold-out).
std::vector<data::PairRef> select_pairs(const data::DatasetManifest& manifest, const std::string& split,
                                        std::uint64_t split_seed);

/// Writes the effective configuration of a run; no timestamps, so identical runs give identical files.
void write_run_config(const fs::path& path, const std::string& command, const nlohmann::json& config);

struct MakePhantomsOptions {
  fs::path out;
  int patients = 5;
  int slices = 2;
  int rows = 64;
  int cols = 64;
  std::uint64_t seed = 0;
};

struct SimulateOptions {
  fs::path data;
  fs::path out;
  data::SimulationConfig sim;
};

struct TrainOptions {
  fs::path data;
  fs::path out;
  std::string preset = "default";  // default | smoke
  std::optional<fs::path> config;  // JSON {"train": {...}, "model": {...}} or a flat train config
  std::optional<fs::path> resume;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
  std::uint64_t split_seed = 0;
  std::string encoder_weights;
  std::string backbone_weights;
  bool quiet = false;
};

struct EnhanceOptions {
  fs::path checkpoint;
  fs::path out;
  std::vector<fs::path> inputs;    // slice files, or
  std::optional<fs::path> data;    // a manifest whose low-dose slices are enhanced
  std::string split = "all";
  std::uint64_t split_seed = 0;
  bool display = false;
};

struct EvaluateOptions {
  fs::path data;
  fs::path out;
  std::string method;
  std::vector<std::string> metrics{"psnr", "ssim", "vif", "lpips", "dists", "piqe"};
  std::string split = "all";
  std::uint64_t split_seed = 0;
  std::string backbone_weights;
  std::string lpips_weights;
  std::string dists_weights;
};

struct RankOptions {
  std::vector<fs::path> reports;
  fs::path out;
};

struct DiffMapOptions {
  fs::path pred;
  fs::path ref;
  fs::path out;  // PNG; the data file goes next to it with a .json extension
};

struct EmbeddingOptions {
  fs::path data;
  fs::path out;
  std::string split = "all";
  std::uint64_t split_seed = 0;
  std::string patient;  // empty = every patient
  std::string encoder_weights;
  std::uint64_t seed = 0;
};

/// Each command writes its outputs plus a run-config file and returns a JSON summary for stdout.
nlohmann::json make_phantoms(const MakePhantomsOptions& o);
nlohmann::json simulate(const SimulateOptions& o);
nlohmann::json train(const TrainOptions& o);
nlohmann::json enhance(const EnhanceOptions& o);
nlohmann::json evaluate(const EvaluateOptions& o);
nlohmann::json rank(const RankOptions& o);
nlohmann::json diff_map(const DiffMapOptions& o);
nlohmann::json analyze_embeddings(const EmbeddingOptions& o);

}  // namespace dpct::cli

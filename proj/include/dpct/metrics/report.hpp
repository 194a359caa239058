#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpct/core/tensor.hpp"
#include "dpct/dprlf/vgg.hpp"
#include "dpct/metrics/perceptual.hpp"
#include "json.hpp"

namespace dpct::metrics {

enum class Direction { HigherBetter, LowerBetter };

std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

struct MetricValue {
  double value = 0.0;
  Direction direction = Direction::HigherBetter;
};

struct ImageScores {
  std::string id;
  std::map<std::string, double> values;
};

struct MetricReport {
  std::string method;
  std::map<std::string, MetricValue> metrics;
  std::vector<ImageScores> per_image;
  /// Free-form labels, e.g. {"lpips": "uncalibrated"}.
  std::map<std::string, std::string> notes;

  /// Throws ArgumentError on non-finite values.
  void validate() const;
  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static MetricReport load(const std::filesystem::path& path);
};

struct RankEntry {
  std::string method;
  int api = 0;
  int rank = 0;
};

/// Entries ordered by rank.
struct RankTable {
  std::vector<RankEntry> entries;

  const RankEntry& at(const std::string& method) const;
  nlohmann::json to_json() const;
};

/// Pairwise win counting: for every metric and every pair of methods, the strictly better
/// method earns one point (exact ties earn nothing). Ranked by descending total, then by name.
RankTable api_rank(const std::vector<MetricReport>& reports);

/// Metric names understood by evaluate(): psnr, ssim, vif, lpips, dists, piqe.
const std::vector<std::string>& known_metrics();
Direction metric_direction(const std::string& name);

struct EvaluationInput {
  std::string id;
  Image pred;  // [0, 1]
  Image ref;   // [0, 1]
};

struct PerceptualAssets {
  const dprlf::Vgg16* backbone = nullptr;
  PerceptualCalibration lpips;
  DistsWeights dists;
};

/// Per-image scores averaged over the inputs in order. Perceptual metrics need `assets.backbone`.
MetricReport evaluate(const std::string& method, const std::vector<EvaluationInput>& inputs,
                      const std::vector<std::string>& metric_names, const PerceptualAssets& assets = {});

}  // namespace dpct::metrics

#include "dpct/metrics/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "dpct/metrics/full_reference.hpp"
#include "dpct/metrics/piqe.hpp"

namespace dpct::metrics {

std::string to_string(Direction d) { return d == Direction::HigherBetter ? "higher_better" : "lower_better"; }

Direction parse_direction(const std::string& s) {
  if (s == "higher_better") return Direction::HigherBetter;
  if (s == "lower_better") return Direction::LowerBetter;
  throw ArgumentError("unknown metric direction '" + s + "'");
}

void MetricReport::validate() const {
  require(!method.empty(), "MetricReport: method name is empty");
  for (const auto& [name, m] : metrics)
    require(std::isfinite(m.value), "MetricReport: metric '" + name + "' of '" + method + "' is not finite");
  for (const auto& img : per_image)
    for (const auto& [name, v] : img.values)
      require(std::isfinite(v), "MetricReport: per-image '" + name + "' of '" + img.id + "' is not finite");
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j{{"method", method}, {"metrics", nlohmann::json::object()}, {"per_image", nlohmann::json::array()}};
  for (const auto& [name, m] : metrics) j["metrics"][name] = {{"value", m.value}, {"direction", to_string(m.direction)}};
  for (const auto& img : per_image) j["per_image"].push_back({{"id", img.id}, {"metrics", img.values}});
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  try {
    r.method = j.at("method").get<std::string>();
    for (const auto& [name, m] : j.at("metrics").items())
      r.metrics[name] = {m.at("value").get<double>(), parse_direction(m.at("direction").get<std::string>())};
    if (j.contains("per_image"))
      for (const auto& img : j["per_image"])
        r.per_image.push_back({img.at("id").get<std::string>(), img.at("metrics").get<std::map<std::string, double>>()});
    if (j.contains("notes")) r.notes = j["notes"].get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metric report: ") + e.what());
  }
  r.validate();
  return r;
}

void MetricReport::save(const std::filesystem::path& path) const {
  validate();
  std::ofstream out(path);
  if (!out) throw Error("cannot write metric report " + path.string());
  out << to_json().dump(2) << '\n';
}

MetricReport MetricReport::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open metric report " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("metric report " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

const RankEntry& RankTable::at(const std::string& method) const {
  for (const auto& e : entries)
    if (e.method == method) return e;
  throw ArgumentError("RankTable: unknown method '" + method + "'");
}

nlohmann::json RankTable::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) j.push_back({{"method", e.method}, {"api", e.api}, {"rank", e.rank}});
  return {{"ranking", j}};
}

RankTable api_rank(const std::vector<MetricReport>& reports) {
  require(reports.size() >= 2, "api_rank: at least two methods are required");
  std::set<std::string> names;
  for (const auto& r : reports) {
    r.validate();
    require(names.insert(r.method).second, "api_rank: duplicate method '" + r.method + "'");
    require(r.metrics.size() == reports[0].metrics.size(), "api_rank: methods report different metric sets");
    for (const auto& [name, m] : reports[0].metrics) {
      auto it = r.metrics.find(name);
      require(it != r.metrics.end(), "api_rank: method '" + r.method + "' lacks metric '" + name + "'");
      require(it->second.direction == m.direction, "api_rank: metric '" + name + "' has inconsistent directions");
    }
  }
  require(!reports[0].metrics.empty(), "api_rank: no metrics to compare");

  std::vector<RankEntry> entries(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) entries[i].method = reports[i].method;
  for (const auto& [name, m] : reports[0].metrics) {
    const bool higher = m.direction == Direction::HigherBetter;
    for (std::size_t i = 0; i < reports.size(); ++i)
      for (std::size_t j = i + 1; j < reports.size(); ++j) {
        const double a = reports[i].metrics.at(name).value, b = reports[j].metrics.at(name).value;
        if (a == b) continue;
        ++entries[(a > b) == higher ? i : j].api;
      }
  }
  std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
    return a.api != b.api ? a.api > b.api : a.method < b.method;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = static_cast<int>(i) + 1;
  return {entries};
}

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names{"psnr", "ssim", "vif", "lpips", "dists", "piqe"};
  return names;
}

Direction metric_direction(const std::string& name) {
  if (name == "psnr" || name == "ssim" || name == "vif" || name == "dists") return Direction::HigherBetter;
  if (name == "lpips" || name == "piqe") return Direction::LowerBetter;
  throw ArgumentError("unknown metric '" + name + "'");
}

MetricReport evaluate(const std::string& method, const std::vector<EvaluationInput>& inputs,
                      const std::vector<std::string>& metric_names, const PerceptualAssets& assets) {
  require(!inputs.empty(), "evaluate: no images to evaluate");
  require(!metric_names.empty(), "evaluate: no metrics requested");
  for (const auto& name : metric_names) {
    metric_direction(name);
    if (name == "lpips" || name == "dists")
      if (!assets.backbone) throw LoadError("evaluate: metric '" + name + "' needs a feature backbone");
  }
  MetricReport report;
  report.method = method;
  std::map<std::string, double> sums;
  for (const auto& in : inputs) {
    require(in.pred.same_shape(in.ref), "evaluate: prediction and reference of '" + in.id + "' differ in shape");
    ImageScores s{in.id, {}};
    for (const auto& name : metric_names) {
      double v = 0.0;
      if (name == "psnr") v = psnr(in.pred, in.ref, 1.0);
      else if (name == "ssim") v = ssim(in.pred, in.ref);
      else if (name == "vif") v = vif_p(in.ref, in.pred);
      else if (name == "lpips") v = perceptual_distance(*assets.backbone, in.pred, in.ref, assets.lpips);
      else if (name == "dists") v = dists(*assets.backbone, in.pred, in.ref, assets.dists);
      else v = piqe(in.pred);
      s.values[name] = v;
      sums[name] += v;
    }
    report.per_image.push_back(std::move(s));
  }
  for (const auto& name : metric_names)
    report.metrics[name] = {sums[name] / static_cast<double>(inputs.size()), metric_direction(name)};
  auto label = [&](const std::string& name, bool calibrated) {
    if (std::find(metric_names.begin(), metric_names.end(), name) != metric_names.end())
      report.notes[name] = calibrated ? "calibrated" : "uncalibrated";
  };
  label("lpips", assets.lpips.calibrated());
  label("dists", assets.dists.calibrated());
  if (assets.backbone && !assets.backbone->pretrained()) {
    for (const char* name : {"lpips", "dists"})
      if (report.notes.count(name)) report.notes[name] += ", random backbone";
  }
  report.validate();
  return report;
}

}  // namespace dpct::metrics

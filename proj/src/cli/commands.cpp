#include "dpct/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "dpct/core/error.hpp"
#include "dpct/data/slice_io.hpp"
#include "dpct/io/png.hpp"
#include "dpct/metrics/report.hpp"
#include "dpct/trainer/trainer.hpp"
#include "dpct/videx/embedding.hpp"

namespace dpct::cli {

using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Sidecar for file outputs: report.json -> report.run.json.
fs::path run_config_beside(const fs::path& out) {
  fs::path p = out;
  return p.replace_extension(".run.json");
}

std::string numbered(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d.png", prefix, index);
  return buf;
}

std::vector<data::PairedSample> load_pairs(const std::vector<data::PairRef>& refs) {
  std::vector<data::PairedSample> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back(data::load_pair(r));
  return out;
}

json split_json(const std::vector<data::PairRef>& refs) {
  json a = json::array();
  for (const auto& r : refs) a.push_back({{"patient_id", r.patient_id}, {"slice_index", r.slice_index}});
  return a;
}

}  // namespace

Image diff_map(const Image& pred_hu, const Image& ref_hu, double max_hu) {
  require(pred_hu.same_shape(ref_hu), "diff_map: prediction and reference shapes differ");
  require(max_hu > 0, "diff_map: max_hu must be positive");
  Image out(pred_hu.rows(), pred_hu.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i)
    out.data()[i] = std::min(1.0, std::abs(pred_hu.data()[i] - ref_hu.data()[i]) / max_hu);
  return out;
}

Image display_window(const Image& hu) { return data::hu_window(hu, data::kDisplayLo, data::kDisplayHi); }

json error_json(const std::exception& e) {
  const auto* de = dynamic_cast<const Error*>(&e);
  return {{"error", {{"kind", de ? de->kind() : "error"}, {"message", e.what()}}}};
}

fs::path resolve_data(const std::optional<fs::path>& data) {
  if (data) return *data;
  const char* root = std::getenv(kDataRootEnv);
  if (!root || !*root)
    throw ArgumentError(std::string("no --data given and ") + kDataRootEnv + " is not set");
  return fs::path(root) / "manifest.json";
}

std::vector<data::PairRef> select_pairs(const data::DatasetManifest& manifest, const std::string& split,
                                        std::uint64_t split_seed) {
  if (split == "all") {
    std::vector<data::PairRef> out;
    for (const auto& p : manifest.patients)
      for (const auto& s : p.slices)
        out.push_back({p.patient_id, s.slice_index, manifest.resolve(s.hdct),
                       s.ldct.empty() ? fs::path() : manifest.resolve(s.ldct)});
    return out;
  }
  const auto sp = data::split_dataset(manifest, split_seed);
  if (split == "train") return sp.train;
  if (split == "val") return sp.val;
  if (split == "test") return sp.test;
  throw ArgumentError("unknown split '" + split + "' (expected all, train, val or test)");
}

void write_run_config(const fs::path& path, const std::string& command, const json& config) {
  write_json(path, {{"command", command}, {"config", config}});
}

json make_phantoms(const MakePhantomsOptions& o) {
  const auto m = data::make_phantom_dataset(o.patients, o.slices, o.rows, o.cols, o.seed, o.out);
  write_run_config(o.out / "run_config.json", "make-phantoms",
                   {{"patients", o.patients}, {"slices", o.slices}, {"rows", o.rows}, {"cols", o.cols}, {"seed", o.seed}});
  return {{"manifest", (o.out / "manifest.json").string()}, {"pairs", m.pair_count()}};
}

json simulate(const SimulateOptions& o) {
  const auto source = data::load_manifest(o.data);
  const auto m = data::simulate_dataset(source, o.sim, o.out);
  write_run_config(o.out / "run_config.json", "simulate", {{"data", o.data.string()}, {"simulation", data::to_json(o.sim)}});
  return {{"manifest", (o.out / "manifest.json").string()}, {"pairs", m.pair_count()}};
}

json train(const TrainOptions& o) {
  const auto manifest = data::load_manifest(o.data);
  const auto split = data::split_dataset(manifest, o.split_seed);
  auto train_pairs = load_pairs(split.train);
  auto val_pairs = load_pairs(split.val);

  std::optional<trainer::Trainer> t;
  if (o.resume) {
    t.emplace(trainer::Trainer::resume(*o.resume, std::move(train_pairs), std::move(val_pairs)));
    if (o.iterations) t->set_total_iterations(*o.iterations);
  } else {
    if (o.preset != "default" && o.preset != "smoke")
      throw ArgumentError("unknown preset '" + o.preset + "' (expected default or smoke)");
    const bool smoke = o.preset == "smoke";
    json tj = (smoke ? trainer::smoke_train_config() : trainer::TrainConfig{}).to_json();
    json mj = (smoke ? trainer::smoke_model_config() : dv2sm::ModelConfig{}).to_json();
    if (o.config) {
      const json file = read_json(*o.config);
      require(file.is_object(), "train: config file must hold a JSON object");
      if (file.contains("train") || file.contains("model")) {
        for (const auto& [k, v] : file.items())
          require(k == "train" || k == "model", "train: unknown config section '" + k + "'");
        if (file.contains("train")) tj.merge_patch(file["train"]);
        if (file.contains("model")) mj.merge_patch(file["model"]);
      } else {
        tj.merge_patch(file);
      }
    }
    if (o.iterations) tj["total_iterations"] = *o.iterations;
    if (o.seed) tj["seed"] = *o.seed;
    if (!o.backbone_weights.empty()) tj["backbone"]["weights_path"] = o.backbone_weights;
    if (!o.encoder_weights.empty()) mj["encoder"]["weights_path"] = o.encoder_weights;
    t.emplace(trainer::TrainConfig::from_json(tj), dv2sm::ModelConfig::from_json(mj), std::move(train_pairs),
              std::move(val_pairs));
  }
  if (!o.quiet)
    t->set_progress([](const trainer::LogEntry& e) {
      std::cerr << "iteration " << e.iteration << " loss " << e.loss << '\n';
    });
  const auto before = t->frozen_checksums();
  if (!o.resume) fs::remove(o.out / "train_log.jsonl");  // the log is append-only within one run
  t->set_output_dir(o.out);
  write_json(o.out / "split.json", {{"split_seed", o.split_seed},
                                    {"train", split_json(split.train)},
                                    {"val", split_json(split.val)},
                                    {"test", split_json(split.test)}});
  write_run_config(o.out / "run_config.json", "train",
                   {{"data", o.data.string()},
                    {"preset", o.preset},
                    {"resume", o.resume ? o.resume->string() : ""},
                    {"split_seed", o.split_seed},
                    {"train", t->config().to_json()},
                    {"model", t->model().config().to_json()}});
  t->run();
  if (!(t->frozen_checksums() == before)) throw NumericError("train: frozen weights changed during training");
  json summary{{"checkpoint", (o.out / "checkpoint.dpct").string()},
               {"iterations", t->iteration()},
               {"parameters", t->model().parameter_count()}};
  if (!t->log().empty()) summary["final_loss"] = t->log().back().loss;
  if (!t->validations().empty()) summary["validation"] = t->validations().back().second.to_json()["metrics"];
  return summary;
}

json enhance(const EnhanceOptions& o) {
  require(o.data.has_value() != !o.inputs.empty(), "enhance: give either input slices or --data, not both");
  const auto model = trainer::load_model(o.checkpoint);
  fs::create_directories(o.out);
  auto run_one = [&](const data::CTSlice& ld, const fs::path& dst) {
    const Image unit = model->enhance(data::hu_to_unit(ld.pixels));
    const data::CTSlice out = data::make_slice(data::unit_to_hu(unit), ld.patient_id, ld.slice_index);
    data::save_slice(dst, out);
    if (o.display) {
      fs::path disp = dst;
      disp.replace_filename(dst.stem().string() + "_display.png");
      // Rendered from the stored slice so the display agrees with the file that was written.
      const Image w = display_window(data::load_slice(dst).pixels);
      io::write_gray8(disp, w.rows(), w.cols(), w.data());
    }
  };
  json written = json::array();
  if (o.data) {
    const auto manifest = data::load_manifest(*o.data);
    data::DatasetManifest out;
    out.root = o.out;
    out.provenance = {{"enhanced_by", o.checkpoint.string()}, {"source_manifest", o.data->string()}};
    for (const auto& r : select_pairs(manifest, o.split, o.split_seed)) {
      require(!r.ldct.empty(), "enhance: manifest entry has no low-dose slice");
      const auto ld = data::load_slice(r.ldct);
      const std::string rel = (fs::path(r.patient_id) / numbered("enh", r.slice_index)).generic_string();
      fs::create_directories((o.out / rel).parent_path());
      run_one(data::CTSlice{ld.pixels, r.patient_id, r.slice_index}, o.out / rel);
      auto it = std::find_if(out.patients.begin(), out.patients.end(),
                             [&](const data::PatientEntry& p) { return p.patient_id == r.patient_id; });
      if (it == out.patients.end()) it = out.patients.insert(out.patients.end(), {r.patient_id, {}});
      it->slices.push_back({r.slice_index, fs::relative(r.hdct, o.out).generic_string(), rel});
      written.push_back(rel);
    }
    data::save_manifest(o.out / "manifest.json", out);
  } else {
    for (const auto& in : o.inputs) {
      const auto ld = data::load_slice(in);
      run_one(ld, o.out / in.filename());
      written.push_back(in.filename().string());
    }
  }
  json inputs = json::array();
  for (const auto& p : o.inputs) inputs.push_back(p.string());
  write_run_config(o.out / "run_config.json", "enhance",
                   {{"checkpoint", o.checkpoint.string()},
                    {"inputs", inputs},
                    {"data", o.data ? o.data->string() : ""},
                    {"split", o.split},
                    {"split_seed", o.split_seed},
                    {"display", o.display},
                    {"display_window_hu", {data::kDisplayLo, data::kDisplayHi}}});
  json summary{{"outputs", written}};
  if (o.data) summary["manifest"] = (o.out / "manifest.json").string();
  return summary;
}

json evaluate(const EvaluateOptions& o) {
  require(!o.method.empty(), "evaluate: --method is required");
  const auto manifest = data::load_manifest(o.data);
  std::vector<metrics::EvaluationInput> inputs;
  for (const auto& r : select_pairs(manifest, o.split, o.split_seed)) {
    const auto p = data::load_pair(r);
    inputs.push_back({r.patient_id + "/" + std::to_string(r.slice_index), data::hu_to_unit(p.ldct.pixels),
                      data::hu_to_unit(p.hdct.pixels)});
  }
  require(!inputs.empty(), "evaluate: no pairs selected");
  bool perceptual = false;
  for (const auto& m : o.metrics) perceptual = perceptual || m == "lpips" || m == "dists";
  std::optional<dprlf::Vgg16> backbone;
  metrics::PerceptualAssets assets;
  if (perceptual) {
    dprlf::BackboneConfig bc;
    bc.weights_path = o.backbone_weights;
    backbone.emplace(bc);
    assets.backbone = &*backbone;
    if (!o.lpips_weights.empty()) assets.lpips = metrics::PerceptualCalibration::load(o.lpips_weights);
    if (!o.dists_weights.empty()) assets.dists = metrics::DistsWeights::load(o.dists_weights);
  }
  const auto report = metrics::evaluate(o.method, inputs, o.metrics, assets);
  report.save(o.out);
  write_run_config(run_config_beside(o.out), "evaluate",
                   {{"data", o.data.string()},
                    {"method", o.method},
                    {"metrics", o.metrics},
                    {"split", o.split},
                    {"split_seed", o.split_seed},
                    {"backbone_weights", o.backbone_weights},
                    {"lpips_weights", o.lpips_weights},
                    {"dists_weights", o.dists_weights}});
  return {{"report", o.out.string()}, {"metrics", report.to_json()["metrics"]}};
}

json rank(const RankOptions& o) {
  std::vector<metrics::MetricReport> reports;
  for (const auto& p : o.reports) reports.push_back(metrics::MetricReport::load(p));
  const auto table = metrics::api_rank(reports);
  const json j = table.to_json();
  write_json(o.out, j);
  json files = json::array();
  for (const auto& p : o.reports) files.push_back(p.string());
  write_run_config(run_config_beside(o.out), "rank", {{"reports", files}});
  return j;
}

json diff_map(const DiffMapOptions& o) {
  const auto pred = data::load_slice(o.pred), ref = data::load_slice(o.ref);
  const Image m = diff_map(pred.pixels, ref.pixels);
  io::write_gray8(o.out, m.rows(), m.cols(), m.data());
  std::vector<double> abs_hu(m.data().size());
  double max_diff = 0.0;
  for (std::size_t i = 0; i < abs_hu.size(); ++i) {
    abs_hu[i] = std::abs(pred.pixels.data()[i] - ref.pixels.data()[i]);
    max_diff = std::max(max_diff, abs_hu[i]);
  }
  fs::path data_file = o.out;
  data_file.replace_extension(".json");
  write_json(data_file, {{"rows", m.rows()},
                         {"cols", m.cols()},
                         {"scale_hu", {0.0, kDiffMapMaxHu}},
                         {"abs_diff_hu", abs_hu}});
  write_run_config(run_config_beside(o.out), "diff-map", {{"pred", o.pred.string()}, {"ref", o.ref.string()}});
  return {{"image", o.out.string()}, {"data", data_file.string()}, {"max_abs_diff_hu", max_diff}};
}

json analyze_embeddings(const EmbeddingOptions& o) {
  const auto manifest = data::load_manifest(o.data);
  std::vector<data::PairRef> refs;
  for (auto& r : select_pairs(manifest, o.split, o.split_seed))
    if (o.patient.empty() || r.patient_id == o.patient) refs.push_back(std::move(r));
  require(refs.size() >= 2, "analyze-embeddings: at least two pairs are required");
  videx::SemanticEncoderConfig ec;
  ec.weights_path = o.encoder_weights;
  const videx::SemanticEncoder encoder(ec);
  const auto analysis = videx::embed_analysis(load_pairs(refs), encoder);
  fs::create_directories(o.out);
  videx::write_points_jsonl(o.out / "points.jsonl", analysis);
  videx::render_scatter_png(o.out / "scatter.png", analysis);
  const double consistency = videx::pair_consistency(analysis, o.seed);
  const json summary{{"pairs", refs.size()},
                     {"pretrained_encoder", encoder.pretrained()},
                     {"explained_variance", analysis.explained_variance},
                     {"pair_consistency", consistency}};
  write_json(o.out / "summary.json", summary);
  write_run_config(o.out / "run_config.json", "analyze-embeddings",
                   {{"data", o.data.string()},
                    {"split", o.split},
                    {"split_seed", o.split_seed},
                    {"patient", o.patient},
                    {"encoder", ec.to_json()},
                    {"seed", o.seed}});
  return summary;
}

}  // namespace dpct::cli

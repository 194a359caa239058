#include "dpct/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "dpct/core/rng.hpp"
#include "dpct/data/ct_slice.hpp"

namespace dpct::trainer {

namespace {

constexpr const char* kCheckpointFormat = "dpct-checkpoint-1";

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<data::PairedSample> checked(std::vector<data::PairedSample> pairs) {
  for (const auto& p : pairs) data::validate(p);
  return pairs;
}

}  // namespace

void TrainConfig::validate() const {
  adam().validate();
  require(batch_size >= 1, "TrainConfig: batch_size must be positive");
  require(total_iterations >= 1, "TrainConfig: total_iterations must be positive");
  require(validate_every >= 1, "TrainConfig: validate_every must be positive");
  require(crop_size >= 0 && crop_size % 16 == 0, "TrainConfig: crop_size must be 0 or a positive multiple of 16");
  require(grad_clip >= 0, "TrainConfig: grad_clip must be non-negative");
  require(pixel_weight >= 0, "TrainConfig: pixel_weight must be non-negative");
  require(charbonnier_eps > 0, "TrainConfig: charbonnier_eps must be positive");
  loss_weights.validate();
  for (const auto& m : val_metrics) metrics::metric_direction(m);
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"beta1", beta1},
          {"beta2", beta2},
          {"eps", eps},
          {"batch_size", batch_size},
          {"total_iterations", total_iterations},
          {"validate_every", validate_every},
          {"loss_arm", dprlf::to_string(loss_arm)},
          {"loss_weights", {loss_weights.low, loss_weights.mid, loss_weights.high}},
          {"pixel_weight", pixel_weight},
          {"charbonnier_eps", charbonnier_eps},
          {"crop_size", crop_size},
          {"grad_clip", grad_clip},
          {"val_metrics", val_metrics},
          {"backbone", backbone.to_json()},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> keys{"learning_rate", "beta1",       "beta2",        "eps",
                                          "batch_size",    "total_iterations", "validate_every", "loss_arm",
                                          "loss_weights",  "pixel_weight", "charbonnier_eps", "crop_size",
                                          "grad_clip",     "val_metrics",  "backbone",     "seed"};
  require(j.is_object(), "train config: expected a JSON object");
  for (const auto& [k, v] : j.items()) require(keys.count(k) > 0, "train config: unknown key '" + k + "'");
  TrainConfig c;
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.total_iterations = j.value("total_iterations", c.total_iterations);
    c.validate_every = j.value("validate_every", c.validate_every);
    if (j.contains("loss_arm")) c.loss_arm = dprlf::parse_loss_arm(j["loss_arm"].get<std::string>());
    if (j.contains("loss_weights")) {
      const auto w = j["loss_weights"].get<std::vector<double>>();
      require(w.size() == 3, "train config: loss_weights must hold three values");
      c.loss_weights = {w[0], w[1], w[2]};
    }
    c.pixel_weight = j.value("pixel_weight", c.pixel_weight);
    c.charbonnier_eps = j.value("charbonnier_eps", c.charbonnier_eps);
    c.crop_size = j.value("crop_size", c.crop_size);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    if (j.contains("val_metrics")) c.val_metrics = j["val_metrics"].get<std::vector<std::string>>();
    if (j.contains("backbone")) c.backbone = dprlf::BackboneConfig::from_json(j["backbone"]);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open train config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("train config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

dv2sm::ModelConfig smoke_model_config() {
  dv2sm::ModelConfig c;
  c.n_groups = 2;
  c.blocks_per_group = 2;
  c.embed_dim = 16;
  c.state_dim = 8;
  c.expand = 1;
  c.ldeb_channels = 16;
  c.encoder.depth = 2;
  c.encoder.embed_dim = 64;
  c.encoder.heads = 2;
  c.encoder.out_dim = 64;
  return c;
}

TrainConfig smoke_train_config() {
  TrainConfig c;
  c.learning_rate = 2e-3;
  c.total_iterations = 200;
  c.validate_every = 200;
  c.crop_size = 64;
  c.seed = 1;
  return c;
}

std::vector<int> validation_iterations(const TrainConfig& cfg) {
  std::vector<int> out;
  for (int it = cfg.validate_every; it <= cfg.total_iterations; it += cfg.validate_every) out.push_back(it);
  return out;
}

Batch sample_batch(const std::vector<data::PairedSample>& train, const TrainConfig& cfg, int iteration) {
  require(!train.empty(), "sample_batch: empty training set");
  Batch b;
  const std::uint64_t base = derive_seed(cfg.seed, static_cast<std::uint64_t>(iteration));
  for (int i = 0; i < cfg.batch_size; ++i) {
    Rng rng = make_rng(base, static_cast<std::uint64_t>(i));
    const int idx = std::uniform_int_distribution<int>(0, static_cast<int>(train.size()) - 1)(rng);
    const auto& pair = train[idx];
    b.pair_index.push_back(idx);
    const int side = std::min(pair.hdct.rows(), pair.hdct.cols());
    if (cfg.crop_size == 0 || cfg.crop_size >= side) b.crops.push_back({0, 0, pair});
    else b.crops.push_back(data::patch_sample(pair, cfg.crop_size, 1, rng())[0]);
  }
  return b;
}

metrics::MetricReport validate(const dv2sm::Model& model, const std::vector<data::PairedSample>& pairs,
                               const std::vector<std::string>& metric_names, const std::string& method) {
  require(!pairs.empty(), "validate: empty validation split");
  std::vector<metrics::EvaluationInput> inputs;
  for (const auto& p : pairs)
    inputs.push_back({p.hdct.patient_id + "/" + std::to_string(p.hdct.slice_index),
                      model.enhance(data::hu_to_unit(p.ldct.pixels)), data::hu_to_unit(p.hdct.pixels)});
  return metrics::evaluate(method, inputs, metric_names);
}

metrics::MetricReport validate_identity(const std::vector<data::PairedSample>& pairs,
                                        const std::vector<std::string>& metric_names) {
  require(!pairs.empty(), "validate: empty validation split");
  std::vector<metrics::EvaluationInput> inputs;
  for (const auto& p : pairs)
    inputs.push_back({p.hdct.patient_id + "/" + std::to_string(p.hdct.slice_index), data::hu_to_unit(p.ldct.pixels),
                      data::hu_to_unit(p.hdct.pixels)});
  return metrics::evaluate("ldct", inputs, metric_names);
}

void write_model(io::Archive& ar, const dv2sm::Model& model) {
  for (const auto& p : model.parameters())
    ar.tensors["model." + p.name] = {p.var.shape(), std::vector<double>(p.var.value().begin(), p.var.value().end())};
  ar.meta["model_config"] = model.config().to_json();
  ar.meta["encoder_checksum"] = std::to_string(model.encoder().checksum());
}

namespace {

std::unique_ptr<dv2sm::Model> read_model(const io::Archive& ar, const std::filesystem::path& path) {
  if (!ar.meta.contains("format") || ar.meta["format"] != kCheckpointFormat)
    throw LoadError("checkpoint " + path.string() + ": not a model checkpoint");
  if (!ar.meta.contains("model_config")) throw LoadError("checkpoint " + path.string() + ": missing model config");
  dv2sm::ModelConfig cfg;
  try {
    cfg = dv2sm::ModelConfig::from_json(ar.meta["model_config"]);
  } catch (const std::exception& e) {
    throw LoadError("checkpoint " + path.string() + ": invalid model config: " + e.what());
  }
  auto model = std::make_unique<dv2sm::Model>(cfg);
  if (ar.meta.contains("encoder_checksum") &&
      ar.meta["encoder_checksum"].get<std::string>() != std::to_string(model->encoder().checksum()))
    throw LoadError("checkpoint " + path.string() + ": semantic encoder weights differ from those used in training");
  std::size_t used = 0;
  for (auto& p : model->parameters()) {
    auto it = ar.tensors.find("model." + p.name);
    if (it == ar.tensors.end()) throw LoadError("checkpoint " + path.string() + ": missing parameter '" + p.name + "'");
    if (it->second.shape != p.var.shape())
      throw LoadError("checkpoint " + path.string() + ": parameter '" + p.name + "' has an incompatible shape");
    p.var.mutable_value() = it->second.values;
    ++used;
  }
  std::size_t stored = 0;
  for (const auto& [name, t] : ar.tensors) stored += name.rfind("model.", 0) == 0;
  if (stored != used) throw LoadError("checkpoint " + path.string() + ": parameters do not match the model config");
  return model;
}

}  // namespace

std::unique_ptr<dv2sm::Model> load_model(const std::filesystem::path& checkpoint) {
  return read_model(io::load_archive(checkpoint), checkpoint);
}

Trainer::Trainer(const TrainConfig& cfg, const dv2sm::ModelConfig& model_cfg, std::vector<data::PairedSample> train,
                 std::vector<data::PairedSample> val)
    : Trainer(cfg, std::make_unique<dv2sm::Model>(model_cfg), std::move(train), std::move(val)) {}

Trainer::Trainer(const TrainConfig& cfg, std::unique_ptr<dv2sm::Model> model, std::vector<data::PairedSample> train,
                 std::vector<data::PairedSample> val)
    : cfg_(cfg), model_(std::move(model)), train_(checked(std::move(train))), val_(checked(std::move(val))) {
  cfg_.validate();
  require(!train_.empty(), "train: the training split is empty");
  if (cfg_.loss_arm == dprlf::LossArm::Dprlf) backbone_ = std::make_shared<const dprlf::Vgg16>(cfg_.backbone);
  objective_ = std::make_unique<dprlf::Objective>(cfg_.loss_arm, backbone_, cfg_.loss_weights, cfg_.pixel_weight,
                                                  cfg_.charbonnier_eps);
  adam_ = std::make_unique<Adam>(model_->parameters(), cfg_.adam());
  clock_origin_ = now_seconds();
}

Trainer Trainer::resume(const std::filesystem::path& checkpoint, std::vector<data::PairedSample> train,
                        std::vector<data::PairedSample> val) {
  const io::Archive ar = io::load_archive(checkpoint);
  auto model = read_model(ar, checkpoint);
  if (!ar.meta.contains("train_config") || !ar.meta.contains("iteration"))
    throw LoadError("checkpoint " + checkpoint.string() + ": missing training state");
  Trainer t(TrainConfig::from_json(ar.meta["train_config"]), std::move(model), std::move(train), std::move(val));
  t.adam_->load_state(ar);
  t.iteration_ = ar.meta["iteration"].get<int>();
  if (t.backbone_ && ar.meta.contains("backbone_checksum") &&
      ar.meta["backbone_checksum"].get<std::string>() != std::to_string(t.backbone_->checksum()))
    throw LoadError("checkpoint " + checkpoint.string() + ": loss backbone weights differ from those used in training");
  return t;
}

FrozenChecksums Trainer::frozen_checksums() const {
  return {model_->encoder().checksum(), backbone_ ? backbone_->checksum() : 0};
}

double Trainer::step() {
  const int it = iteration_ + 1;
  const Batch batch = sample_batch(train_, cfg_, it);
  adam_->zero_grad();
  double total = 0.0;
  const double inv = 1.0 / cfg_.batch_size;
  for (const auto& crop : batch.crops) {
    const ag::Var ld = ag::Var::from(data::hu_to_unit(crop.pair.ldct.pixels));
    const ag::Var gt = ag::Var::from(data::hu_to_unit(crop.pair.hdct.pixels));
    const ag::Var loss = (*objective_)(model_->forward(ld), gt);
    total += loss.value()[0];
    if (!std::isfinite(loss.value()[0])) break;
    ag::backward(ag::scale(loss, inv));
  }
  const double mean = total * inv;
  if (!std::isfinite(mean)) {
    std::ostringstream msg;
    msg << "non-finite training loss at iteration " << it << " (batch pairs:";
    for (int i : batch.pair_index) msg << ' ' << i;
    msg << ')';
    if (out_dir_) {
      save(*out_dir_ / "diagnostic.dpct");
      msg << "; parameters before the update were saved to " << (*out_dir_ / "diagnostic.dpct").string();
    }
    throw NumericError(msg.str());
  }
  if (cfg_.grad_clip > 0) adam_->clip_grad_norm(cfg_.grad_clip);
  adam_->step();
  iteration_ = it;

  const LogEntry entry{it, mean, now_seconds() - clock_origin_};
  log_.push_back(entry);
  if (out_dir_) {
    std::ofstream out(*out_dir_ / "train_log.jsonl", std::ios::app);
    out << nlohmann::json{{"iteration", entry.iteration}, {"loss", entry.loss}, {"wall_time", entry.wall_time}}.dump()
        << '\n';
  }
  if (progress_) progress_(entry);

  if (!val_.empty() && it % cfg_.validate_every == 0) {
    auto report = validate(*model_, val_, cfg_.val_metrics);
    if (out_dir_) {
      std::ostringstream name;
      name << "validation_" << std::setw(6) << std::setfill('0') << it << ".json";
      nlohmann::json j = report.to_json();
      j["iteration"] = it;
      write_json(*out_dir_ / name.str(), j);
    }
    validations_.emplace_back(it, std::move(report));
  }
  return mean;
}

void Trainer::run(std::optional<int> max_steps) {
  int done = 0;
  while (iteration_ < cfg_.total_iterations && (!max_steps || done < *max_steps)) {
    step();
    ++done;
  }
  if (out_dir_) save(*out_dir_ / "checkpoint.dpct");
}

void Trainer::save(const std::filesystem::path& path) const {
  io::Archive ar;
  write_model(ar, *model_);
  adam_->save_state(ar);
  ar.meta["format"] = kCheckpointFormat;
  ar.meta["train_config"] = cfg_.to_json();
  ar.meta["iteration"] = iteration_;
  if (backbone_) ar.meta["backbone_checksum"] = std::to_string(backbone_->checksum());
  io::save_archive(path, ar);
}

void Trainer::set_total_iterations(int total) {
  require(total >= 1 && total >= iteration_, "Trainer: total_iterations must be positive and not before the current iteration");
  cfg_.total_iterations = total;
}

void Trainer::set_output_dir(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  out_dir_ = dir;
  write_json(dir / "config.json", {{"train", cfg_.to_json()}, {"model", model_->config().to_json()}});
}

}  // namespace dpct::trainer

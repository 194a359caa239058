#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpct/data/dataset.hpp"
#include "dpct/dprlf/loss.hpp"
#include "dpct/dv2sm/model.hpp"
#include "dpct/metrics/report.hpp"
#include "dpct/trainer/adam.hpp"
#include "json.hpp"

namespace dpct::trainer {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  int batch_size = 2;
  int total_iterations = 45000;
  int validate_every = 8000;
  dprlf::LossArm loss_arm = dprlf::LossArm::Dprlf;
  dprlf::LossWeights loss_weights;
  double pixel_weight = 0.0;        // optional extra pixel-MSE term
  double charbonnier_eps = 1e-3;
  int crop_size = 64;               // 0 = full slices
  double grad_clip = 0.0;           // 0 = off
  std::vector<std::string> val_metrics{"psnr", "ssim", "vif"};
  dprlf::BackboneConfig backbone;
  std::uint64_t seed = 0;

  AdamConfig adam() const { return {learning_rate, beta1, beta2, eps}; }
  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys are rejected so typos do not silently fall back to defaults.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);
};

/// Desk-scale preset: a narrow two-group model trained at lr 2e-3 on 64x64 crops for 200 iterations.
dv2sm::ModelConfig smoke_model_config();
TrainConfig smoke_train_config();

/// Iterations (1-based) after which validation runs: every multiple of validate_every up to the total.
std::vector<int> validation_iterations(const TrainConfig& cfg);

struct LogEntry {
  int iteration = 0;
  double loss = 0.0;
  double wall_time = 0.0;  // seconds since the run (or resume) started
};

struct Batch {
  std::vector<int> pair_index;
  std::vector<data::PatchPair> crops;
};

/// Batch for one iteration; depends only on (seed, iteration, data shapes), never on history.
Batch sample_batch(const std::vector<data::PairedSample>& train, const TrainConfig& cfg, int iteration);

/// Full-reference metrics of model outputs against the high-dose slices, averaged over `pairs`.
metrics::MetricReport validate(const dv2sm::Model& model, const std::vector<data::PairedSample>& pairs,
                               const std::vector<std::string>& metric_names, const std::string& method = "model");
/// Same metrics for the raw low-dose input (the no-op baseline).
metrics::MetricReport validate_identity(const std::vector<data::PairedSample>& pairs,
                                        const std::vector<std::string>& metric_names);

struct FrozenChecksums {
  std::uint64_t encoder = 0;
  std::uint64_t backbone = 0;
  bool operator==(const FrozenChecksums&) const = default;
};

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const dv2sm::ModelConfig& model_cfg, std::vector<data::PairedSample> train,
          std::vector<data::PairedSample> val = {});

  /// Restores model, optimizer and iteration counter from a checkpoint written by save().
  static Trainer resume(const std::filesystem::path& checkpoint, std::vector<data::PairedSample> train,
                        std::vector<data::PairedSample> val = {});

  /// One optimizer update; returns the batch-mean loss. Throws NumericError on a non-finite loss,
  /// after writing a diagnostic checkpoint when an output directory is set.
  double step();

  /// Runs until `total_iterations` (or `max_steps` more updates), validating on schedule.
  /// With an output directory: appends train_log.jsonl, writes validation_NNNNNN.json,
  /// config.json and checkpoint.dpct at the end.
  void run(std::optional<int> max_steps = std::nullopt);

  void save(const std::filesystem::path& path) const;
  void set_output_dir(const std::filesystem::path& dir);
  /// Moves the end of the run, e.g. to extend a resumed run; must not precede the current iteration.
  void set_total_iterations(int total);
  void set_progress(std::function<void(const LogEntry&)> cb) { progress_ = std::move(cb); }

  int iteration() const { return iteration_; }
  const dv2sm::Model& model() const { return *model_; }
  dv2sm::Model& model() { return *model_; }
  const Adam& optimizer() const { return *adam_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<LogEntry>& log() const { return log_; }
  const std::vector<std::pair<int, metrics::MetricReport>>& validations() const { return validations_; }
  FrozenChecksums frozen_checksums() const;

 private:
  Trainer(const TrainConfig& cfg, std::unique_ptr<dv2sm::Model> model, std::vector<data::PairedSample> train,
          std::vector<data::PairedSample> val);

  TrainConfig cfg_;
  std::unique_ptr<dv2sm::Model> model_;
  std::shared_ptr<const dprlf::Vgg16> backbone_;
  std::unique_ptr<dprlf::Objective> objective_;
  std::unique_ptr<Adam> adam_;
  std::vector<data::PairedSample> train_, val_;
  int iteration_ = 0;
  std::vector<LogEntry> log_;
  std::vector<std::pair<int, metrics::MetricReport>> validations_;
  std::optional<std::filesystem::path> out_dir_;
  std::function<void(const LogEntry&)> progress_;
  double clock_origin_ = 0.0;
};

/// Model-only view of a checkpoint (for inference). Throws LoadError on incompatible files.
std::unique_ptr<dv2sm::Model> load_model(const std::filesystem::path& checkpoint);
/// Writes model parameters under model.<name> plus meta["model_config"].
void write_model(io::Archive& ar, const dv2sm::Model& model);

}  // namespace dpct::trainer

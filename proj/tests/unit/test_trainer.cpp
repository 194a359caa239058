#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>

#include "dpct/core/error.hpp"
#include "dpct/data/ct_slice.hpp"
#include "dpct/data/phantom.hpp"
#include "dpct/data/simulate.hpp"
#include "dpct/metrics/full_reference.hpp"
#include "dpct/trainer/trainer.hpp"
#include "small_model.hpp"

namespace {

using namespace dpct;

std::vector<data::PairedSample> make_pairs(int n, int side, std::uint64_t seed0) {
  data::SimulationConfig sc;
  sc.noise.incident_photons = 2e3;
  sc.n_angles = 90;
  std::vector<data::PairedSample> out;
  for (int i = 0; i < n; ++i) {
    auto hd = data::make_slice(data::body_phantom(side, side, seed0 + i), "P" + std::to_string(i), i);
    out.push_back({data::simulate_low_dose(hd, sc), hd});
  }
  return out;
}

trainer::TrainConfig fast_config(dprlf::LossArm arm = dprlf::LossArm::Mse) {
  trainer::TrainConfig c;
  c.learning_rate = 1e-3;
  c.crop_size = 16;
  c.total_iterations = 10;
  c.validate_every = 1000;
  c.loss_arm = arm;
  c.val_metrics = {"psnr"};
  c.seed = 7;
  return c;
}

std::vector<std::vector<double>> snapshot(const dv2sm::Model& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.parameters()) out.emplace_back(p.var.value().begin(), p.var.value().end());
  return out;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("dpct_trainer_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

TEST(Adam, TwoStepsMatchClosedFormOnQuadratic) {
  // loss = 0.5 * sum(c_i x_i^2), gradient c_i x_i
  const std::vector<double> x0{0.7, -1.3, 2.5e-3}, c{1.0, 4.0, 0.5};
  auto x = ag::Var::leaf({3}, x0, true);
  const auto cv = ag::Var::constant({3}, c);
  trainer::AdamConfig cfg{0.05, 0.9, 0.99, 1e-8};
  trainer::Adam opt({{"x", x}}, cfg);

  std::vector<double> want = x0, m(3, 0.0), v(3, 0.0);
  for (int t = 1; t <= 2; ++t) {
    opt.zero_grad();
    ag::backward(ag::scale(ag::sum(ag::mul(cv, ag::mul(x, x))), 0.5));
    opt.step();
    for (int i = 0; i < 3; ++i) {
      const double g = c[i] * want[i];
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g;
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t)), vh = v[i] / (1 - std::pow(cfg.beta2, t));
      want[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.eps);
    }
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(x.value()[i], want[i], 1e-12 * std::abs(want[i])) << "t=" << t;
  }
  EXPECT_EQ(opt.step_count(), 2);
}

TEST(Adam, FirstStepMovesEveryCoordinateByTheLearningRate) {
  auto x = ag::Var::leaf({2}, {3.0, -0.02}, true);
  trainer::Adam opt({{"x", x}}, {0.01, 0.9, 0.99, 1e-300});
  ag::backward(ag::sum(ag::mul(x, x)));
  opt.step();
  EXPECT_DOUBLE_EQ(x.value()[0], 2.99);
  EXPECT_DOUBLE_EQ(x.value()[1], -0.01);
}

TEST(Adam, ClipGradNormRescalesJointly) {
  auto a = ag::Var::leaf({2}, {0, 0}, true), b = ag::Var::leaf({1}, {0}, true);
  trainer::Adam opt({{"a", a}, {"b", b}}, {});
  a.mutable_grad() = {3.0, 0.0};
  b.mutable_grad() = {4.0};
  EXPECT_DOUBLE_EQ(opt.clip_grad_norm(1.0), 5.0);
  EXPECT_DOUBLE_EQ(a.grad()[0], 0.6);
  EXPECT_DOUBLE_EQ(b.grad()[0], 0.8);
  EXPECT_DOUBLE_EQ(opt.clip_grad_norm(10.0), 1.0);
  EXPECT_DOUBLE_EQ(b.grad()[0], 0.8);
}

TEST(Adam, InvalidConfigIsArgumentError) {
  EXPECT_THROW((trainer::AdamConfig{0.0, 0.9, 0.99, 1e-8}.validate()), ArgumentError);
  EXPECT_THROW((trainer::AdamConfig{1e-4, 1.0, 0.99, 1e-8}.validate()), ArgumentError);
  EXPECT_THROW((trainer::AdamConfig{1e-4, 0.9, -0.1, 1e-8}.validate()), ArgumentError);
}

TEST(TrainConfig, ValidationCadence) {
  trainer::TrainConfig c;
  EXPECT_EQ(trainer::validation_iterations(c), (std::vector<int>{8000, 16000, 24000, 32000, 40000}));
  c.total_iterations = 16000;
  EXPECT_EQ(trainer::validation_iterations(c), (std::vector<int>{8000, 16000}));
}

TEST(TrainConfig, DefaultsAndJsonRoundTrip) {
  const trainer::TrainConfig d;
  EXPECT_EQ(d.learning_rate, 1e-4);
  EXPECT_EQ(d.beta1, 0.9);
  EXPECT_EQ(d.beta2, 0.99);
  EXPECT_EQ(d.batch_size, 2);
  EXPECT_EQ(d.total_iterations, 45000);
  EXPECT_EQ(d.loss_arm, dprlf::LossArm::Dprlf);

  auto c = fast_config(dprlf::LossArm::Charbonnier);
  c.grad_clip = 0.5;
  c.loss_weights = {0.2, 0.3, 0.5};
  const auto back = trainer::TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(TrainConfig, UnknownKeyAndBadValuesAreRejected) {
  auto j = trainer::TrainConfig{}.to_json();
  j["learing_rate"] = 1e-3;
  EXPECT_THROW(trainer::TrainConfig::from_json(j), ArgumentError);
  EXPECT_THROW(trainer::TrainConfig::from_json({{"crop_size", 20}}), ArgumentError);
  EXPECT_THROW(trainer::TrainConfig::from_json({{"batch_size", "two"}}), ArgumentError);
  EXPECT_THROW(trainer::TrainConfig::from_json({{"val_metrics", {"psnr", "bogus"}}}), ArgumentError);
}

TEST(SampleBatch, StatelessAndSeedDependent) {
  const auto pairs = make_pairs(3, 32, 10);
  auto c = fast_config();
  const auto a = trainer::sample_batch(pairs, c, 5);
  trainer::sample_batch(pairs, c, 4);
  const auto b = trainer::sample_batch(pairs, c, 5);
  ASSERT_EQ(a.crops.size(), 2u);
  EXPECT_EQ(a.pair_index, b.pair_index);
  for (std::size_t i = 0; i < a.crops.size(); ++i) {
    EXPECT_EQ(a.crops[i].row, b.crops[i].row);
    EXPECT_EQ(a.crops[i].col, b.crops[i].col);
    EXPECT_EQ(a.crops[i].pair.ldct.pixels.rows(), 16);
  }
  bool differs = false;
  for (int it = 1; it <= 8 && !differs; ++it) {
    const auto x = trainer::sample_batch(pairs, c, it), y = trainer::sample_batch(pairs, c, it + 1);
    differs = x.pair_index != y.pair_index || x.crops[0].row != y.crops[0].row || x.crops[0].col != y.crops[0].col;
  }
  EXPECT_TRUE(differs);
  c.crop_size = 0;
  EXPECT_EQ(trainer::sample_batch(pairs, c, 1).crops[0].pair.ldct.pixels.rows(), 32);
}

TEST(Trainer, EmptyTrainSplitIsArgumentError) {
  EXPECT_THROW(trainer::Trainer(fast_config(), dpct::testing::small_model_config(), {}), ArgumentError);
}

TEST(Trainer, IdentityModelValidationEqualsRawData) {
  const auto pairs = make_pairs(2, 32, 20);
  dv2sm::Model model(dpct::testing::small_model_config());
  const auto got = trainer::validate(model, pairs, {"psnr", "ssim"});
  const auto raw = trainer::validate_identity(pairs, {"psnr", "ssim"});
  EXPECT_EQ(got.metrics.at("psnr").value, raw.metrics.at("psnr").value);
  EXPECT_EQ(got.metrics.at("ssim").value, raw.metrics.at("ssim").value);
  double want = 0;
  for (const auto& p : pairs)
    want += metrics::psnr(data::hu_to_unit(p.ldct.pixels), data::hu_to_unit(p.hdct.pixels)) / pairs.size();
  EXPECT_NEAR(raw.metrics.at("psnr").value, want, 1e-12);
  EXPECT_EQ(trainer::validate(model, pairs, {"psnr"}).to_json(), trainer::validate(model, pairs, {"psnr"}).to_json());
}

TEST(Trainer, IdenticalSeedsGiveIdenticalLossTraces) {
  const auto pairs = make_pairs(3, 32, 30);
  trainer::Trainer a(fast_config(), dpct::testing::small_model_config(), pairs);
  trainer::Trainer b(fast_config(), dpct::testing::small_model_config(), pairs);
  a.run(4);
  b.run(4);
  ASSERT_EQ(a.log().size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a.log()[i].loss, b.log()[i].loss);
  EXPECT_EQ(snapshot(a.model()), snapshot(b.model()));
}

TEST(Trainer, CheckpointResumeMatchesUninterruptedRun) {
  const auto pairs = make_pairs(3, 32, 40);
  const auto dir = temp_dir("resume");
  trainer::Trainer full(fast_config(), dpct::testing::small_model_config(), pairs);
  full.run(3);

  trainer::Trainer part(fast_config(), dpct::testing::small_model_config(), pairs);
  part.run(2);
  part.save(dir / "a.dpct");
  auto resumed = trainer::Trainer::resume(dir / "a.dpct", pairs);
  EXPECT_EQ(resumed.iteration(), 2);
  EXPECT_EQ(snapshot(resumed.model()), snapshot(part.model()));
  EXPECT_EQ(resumed.optimizer().step_count(), 2);
  resumed.save(dir / "b.dpct");
  EXPECT_EQ(read_bytes(dir / "a.dpct"), read_bytes(dir / "b.dpct"));

  const double loss = resumed.step();
  EXPECT_EQ(loss, full.log().back().loss);
  EXPECT_EQ(snapshot(resumed.model()), snapshot(full.model()));

  const auto model = trainer::load_model(dir / "a.dpct");
  EXPECT_EQ(snapshot(*model), snapshot(part.model()));
  std::filesystem::remove_all(dir);
}

TEST(Trainer, FinishedRunCanBeExtendedAfterResume) {
  const auto pairs = make_pairs(3, 32, 41);
  const auto dir = temp_dir("extend");
  auto cfg = fast_config();
  cfg.total_iterations = 4;
  trainer::Trainer full(cfg, dpct::testing::small_model_config(), pairs);
  full.run();

  cfg.total_iterations = 2;
  trainer::Trainer part(cfg, dpct::testing::small_model_config(), pairs);
  part.run();
  part.save(dir / "a.dpct");
  auto resumed = trainer::Trainer::resume(dir / "a.dpct", pairs);
  EXPECT_THROW(resumed.set_total_iterations(1), ArgumentError);
  resumed.set_total_iterations(4);
  resumed.run();
  EXPECT_EQ(resumed.iteration(), 4);
  EXPECT_EQ(snapshot(resumed.model()), snapshot(full.model()));
  std::filesystem::remove_all(dir);
}

TEST(Trainer, IncompatibleCheckpointIsLoadError) {
  const auto dir = temp_dir("bad");
  io::Archive ar;
  ar.meta["format"] = "something-else";
  io::save_archive(dir / "x.dpct", ar);
  EXPECT_THROW(trainer::load_model(dir / "x.dpct"), LoadError);
  EXPECT_THROW(trainer::load_model(dir / "missing.dpct"), LoadError);
  std::filesystem::remove_all(dir);
}

TEST(Trainer, FrozenWeightsUnchangedAndTrainableWeightsMove) {
  const auto pairs = make_pairs(2, 32, 50);
  trainer::Trainer t(fast_config(dprlf::LossArm::Dprlf), dpct::testing::small_model_config(), pairs);
  const auto before = t.frozen_checksums();
  EXPECT_NE(before.backbone, 0u);
  const auto params = snapshot(t.model());
  t.run(2);
  EXPECT_EQ(t.frozen_checksums(), before);
  EXPECT_NE(snapshot(t.model()), params);
  for (const auto& p : t.model().parameters()) EXPECT_EQ(p.name.rfind("extractor.encoder", 0), std::string::npos) << p.name;
}

TEST(Trainer, NonFiniteLossAbortsWithDiagnostic) {
  const auto pairs = make_pairs(2, 32, 60);
  const auto dir = temp_dir("nan");
  trainer::Trainer t(fast_config(), dpct::testing::small_model_config(), pairs);
  t.set_output_dir(dir);
  t.model().parameters().back().var.mutable_value()[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(t.step(), NumericError);
  EXPECT_EQ(t.iteration(), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "diagnostic.dpct"));
  std::filesystem::remove_all(dir);
}

TEST(Trainer, OutputDirectoryArtifacts) {
  const auto pairs = make_pairs(3, 32, 70);
  const auto dir = temp_dir("out");
  auto c = fast_config();
  c.total_iterations = 4;
  c.validate_every = 2;
  trainer::Trainer t(c, dpct::testing::small_model_config(), pairs, {pairs[0]});
  t.set_output_dir(dir);
  t.run();
  EXPECT_EQ(t.iteration(), 4);
  ASSERT_EQ(t.validations().size(), 2u);
  EXPECT_EQ(t.validations()[0].first, 2);
  for (const char* f : {"config.json", "train_log.jsonl", "validation_000002.json", "validation_000004.json",
                        "checkpoint.dpct"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream log(dir / "train_log.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("iteration").get<int>(), ++n);
    EXPECT_TRUE(j.contains("loss") && j.contains("wall_time"));
  }
  EXPECT_EQ(n, 4);
  std::filesystem::remove_all(dir);
}

}  // namespace

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dpct/cli/commands.hpp"

namespace {

using namespace dpct;
namespace fs = std::filesystem;

void add_split(CLI::App* sub, std::string& split, std::uint64_t& seed) {
  sub->add_option("--split", split, "Pairs to use: all, train, val or test")
      ->check(CLI::IsMember({"all", "train", "val", "test"}))
      ->capture_default_str();
  sub->add_option("--split-seed", seed, "Seed of the patient-level split")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-dose CT enhancement: simulation, training, inference and evaluation"};
  app.require_subcommand(1);

  std::optional<fs::path> data;

  cli::MakePhantomsOptions ph;
  auto* s_ph = app.add_subcommand("make-phantoms", "Write a synthetic high-dose dataset of body phantoms");
  s_ph->add_option("--out", ph.out, "Output directory")->required();
  s_ph->add_option("--patients", ph.patients)->capture_default_str();
  s_ph->add_option("--slices", ph.slices, "Slices per patient")->capture_default_str();
  s_ph->add_option("--rows", ph.rows)->capture_default_str();
  s_ph->add_option("--cols", ph.cols)->capture_default_str();
  s_ph->add_option("--seed", ph.seed)->capture_default_str();

  cli::SimulateOptions sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate low-dose counterparts of every high-dose slice");
  s_sim->add_option("--data", data, "High-dose manifest (default: $DPCT_DATA_ROOT/manifest.json)");
  s_sim->add_option("--out", sim.out, "Output directory")->required();
  s_sim->add_option("--photons", sim.sim.noise.incident_photons, "Incident photons per detector bin")
      ->capture_default_str();
  s_sim->add_option("--electronic-sigma", sim.sim.noise.electronic_sigma)->capture_default_str();
  s_sim->add_option("--angles", sim.sim.n_angles)->capture_default_str();
  s_sim->add_option("--spacing", sim.sim.pixel_spacing_mm, "Pixel spacing in mm")->capture_default_str();
  s_sim->add_option("--seed", sim.sim.noise.seed)->capture_default_str();

  cli::TrainOptions tr;
  std::optional<fs::path> tr_config, tr_resume;
  std::optional<int> tr_iterations;
  std::optional<std::uint64_t> tr_seed;
  auto* s_tr = app.add_subcommand("train", "Train the enhancement model on the train split of a manifest");
  s_tr->add_option("--data", data, "Paired manifest (default: $DPCT_DATA_ROOT/manifest.json)");
  s_tr->add_option("--out", tr.out, "Run directory")->required();
  s_tr->add_option("--config", tr_config, "JSON config: {\"train\": {...}, \"model\": {...}} or flat train keys");
  s_tr->add_option("--preset", tr.preset, "Starting configuration")
      ->check(CLI::IsMember({"default", "smoke"}))
      ->capture_default_str();
  s_tr->add_option("--resume", tr_resume, "Continue from a checkpoint");
  s_tr->add_option("--iterations", tr_iterations, "Override total_iterations");
  s_tr->add_option("--seed", tr_seed, "Override the training seed");
  s_tr->add_option("--split-seed", tr.split_seed)->capture_default_str();
  s_tr->add_option("--encoder-weights", tr.encoder_weights, "Pretrained semantic encoder archive");
  s_tr->add_option("--backbone-weights", tr.backbone_weights, "Pretrained loss backbone archive");
  s_tr->add_flag("--quiet", tr.quiet, "Do not print per-iteration progress");

  cli::EnhanceOptions en;
  std::optional<fs::path> en_data;
  auto* s_en = app.add_subcommand("enhance", "Run a trained model on low-dose slices");
  s_en->add_option("--checkpoint", en.checkpoint)->required();
  s_en->add_option("--out", en.out, "Output directory")->required();
  s_en->add_option("inputs", en.inputs, "Slice files (.png or .raw with sidecar)");
  s_en->add_option("--data", en_data, "Manifest whose low-dose slices are enhanced");
  add_split(s_en, en.split, en.split_seed);
  s_en->add_flag("--display", en.display, "Also write [-160, 240] HU display images");

  cli::EvaluateOptions ev;
  auto* s_ev = app.add_subcommand("evaluate", "Score the low-dose entries of a manifest against their references");
  s_ev->add_option("--data", data, "Manifest (default: $DPCT_DATA_ROOT/manifest.json)");
  s_ev->add_option("--method", ev.method, "Method name recorded in the report")->required();
  s_ev->add_option("--out", ev.out, "Report JSON path")->required();
  s_ev->add_option("--metrics", ev.metrics, "Subset of psnr ssim vif lpips dists piqe")->delimiter(',')->capture_default_str();
  add_split(s_ev, ev.split, ev.split_seed);
  s_ev->add_option("--backbone-weights", ev.backbone_weights);
  s_ev->add_option("--lpips-weights", ev.lpips_weights);
  s_ev->add_option("--dists-weights", ev.dists_weights);

  cli::RankOptions rk;
  auto* s_rk = app.add_subcommand("rank", "Rank methods by pairwise metric wins");
  s_rk->add_option("reports", rk.reports, "Metric reports")->required();
  s_rk->add_option("--out", rk.out, "Ranking JSON path")->required();

  cli::DiffMapOptions dm;
  auto* s_dm = app.add_subcommand("diff-map", "Absolute difference map scaled over 0-200 HU");
  s_dm->add_option("--pred", dm.pred)->required();
  s_dm->add_option("--ref", dm.ref)->required();
  s_dm->add_option("--out", dm.out, "PNG path; a .json data file is written beside it")->required();

  cli::EmbeddingOptions em;
  auto* s_em = app.add_subcommand("analyze-embeddings", "Project paired LD/HD semantic embeddings onto two axes");
  s_em->add_option("--data", data, "Paired manifest (default: $DPCT_DATA_ROOT/manifest.json)");
  s_em->add_option("--out", em.out, "Output directory")->required();
  add_split(s_em, em.split, em.split_seed);
  s_em->add_option("--patient", em.patient, "Restrict to one patient");
  s_em->add_option("--encoder-weights", em.encoder_weights);
  s_em->add_option("--seed", em.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", {{"kind", "usage_error"}, {"message", e.what()}}}}.dump() << '\n';
    return 2;
  }

  try {
    nlohmann::json result;
    if (s_ph->parsed()) {
      result = cli::make_phantoms(ph);
    } else if (s_sim->parsed()) {
      sim.data = cli::resolve_data(data);
      result = cli::simulate(sim);
    } else if (s_tr->parsed()) {
      tr.data = cli::resolve_data(data);
      tr.config = tr_config;
      tr.resume = tr_resume;
      tr.iterations = tr_iterations;
      tr.seed = tr_seed;
      result = cli::train(tr);
    } else if (s_en->parsed()) {
      en.data = en_data;
      result = cli::enhance(en);
    } else if (s_ev->parsed()) {
      ev.data = cli::resolve_data(data);
      result = cli::evaluate(ev);
    } else if (s_rk->parsed()) {
      result = cli::rank(rk);
    } else if (s_dm->parsed()) {
      result = cli::diff_map(dm);
    } else if (s_em->parsed()) {
      em.data = cli::resolve_data(data);
      result = cli::analyze_embeddings(em);
    }
    std::cout << result.dump(2) << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << cli::error_json(e).dump() << '\n';
    return 1;
  }
}

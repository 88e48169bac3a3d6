// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

// point2 command-line tool. Exit status: 0 success, 1 validation error,
// 2 numeric failure (and gradcheck failures). Errors print one line:
//
//   error[validation]: <Type>: <message>
//   error[numeric]: <Type>: <message>

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "point2/errors.hpp"

namespace {

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int fail(const char* kind, const std::string& what, int code) {
  std::cerr << "error[" << kind << "]: " << one_line(what) << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace point2;
  CLI::App app{"point2: multiview 2D/3D rigid registration by POI tracking and triangulation"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "run configuration (JSON)");
  app.add_option("--set", overrides, "override a config key, e.g. train.lr1=0.02")->allow_extra_args(false);

  cli::PhantomArgs phantom;
  auto* sc = app.add_subcommand("phantom", "write a synthetic volume");
  sc->add_option("-o,--out", phantom.out, "output base path");
  sc->add_option("--seed", phantom.seed, "phantom seed (overrides phantom.rng_seed)");

  cli::RenderArgs render;
  sc = app.add_subcommand("render", "render a DRR of a volume");
  sc->add_option("--volume", render.volume, "volume base path")->required();
  sc->add_option("-o,--out", render.out, "output image base path");
  sc->add_option("--pose", render.pose_file, "pose JSON file");
  sc->add_option("--pose-json", render.pose_json, "pose as inline JSON");
  sc->add_option("--view", render.view, "ap or lateral");

  cli::DatasetArgs dataset;
  sc = app.add_subcommand("dataset", "generate a synthetic dataset");
  sc->add_option("-o,--out", dataset.out, "output directory");

  cli::TrainArgs train;
  sc = app.add_subcommand("train", "two-stage training of the per-view trackers");
  sc->add_option("--dataset", train.dataset, "dataset directory");
  sc->add_option("--params", train.params, "output parameter prefix");
  sc->add_option("--curve", train.curve, "loss curve CSV");

  cli::TrackArgs track;
  sc = app.add_subcommand("track", "track POIs on a split and report mPD");
  sc->add_option("--dataset", track.dataset, "dataset directory");
  sc->add_option("--params", track.params, "parameter prefix");
  sc->add_option("--split", track.split, "train, val or test");
  sc->add_option("-o,--out", track.out, "tracked points CSV");

  cli::RegisterArgs reg;
  sc = app.add_subcommand("register", "register every case of a split");
  sc->add_option("--dataset", reg.dataset, "dataset directory");
  sc->add_option("--params", reg.params, "parameter prefix");
  sc->add_option("--split", reg.split, "train, val or test");
  sc->add_option("-o,--out", reg.out, "records (JSON lines)");
  sc->add_flag("--oracle", reg.oracle, "track with the ground-truth 2D POIs");

  cli::EvalArgs eval;
  sc = app.add_subcommand("eval", "summarize registration records");
  sc->add_option("--records", eval.records, "records (JSON lines)");
  sc->add_option("-o,--out", eval.out, "metrics CSV");

  cli::AblationArgs ablation;
  sc = app.add_subcommand("ablation", "POI-network ablation table");
  sc->add_option("--dataset", ablation.dataset, "dataset directory");
  sc->add_option("-o,--out", ablation.out, "ablation CSV");
  sc->add_option("--tracked-dir", ablation.tracked_dir, "directory for per-row tracked points");

  cli::GradcheckArgs gradcheck;
  sc = app.add_subcommand("gradcheck", "finite-difference gradient suites");
  sc->add_option("--seeds", gradcheck.seeds, "number of seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("validation", std::string("UsageError: ") + e.what(), 1);
  }

  try {
    const RunConfig cfg = config_path.empty() ? default_run_config(overrides) : load_run_config(config_path, overrides);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "phantom") cli::run_phantom(cfg, phantom, std::cout);
    if (cmd == "render") cli::run_render(cfg, render, std::cout);
    if (cmd == "dataset") cli::run_dataset(cfg, dataset, std::cout);
    if (cmd == "train") cli::run_train(cfg, train, std::cout);
    if (cmd == "track") cli::run_track(cfg, track, std::cout);
    if (cmd == "register") cli::run_register(cfg, reg, std::cout);
    if (cmd == "eval") cli::run_eval(cfg, eval, std::cout);
    if (cmd == "ablation") cli::run_ablation(cfg, ablation, std::cout);
    if (cmd == "gradcheck" && !cli::run_gradcheck(cfg, gradcheck, std::cout)) {
      return fail("numeric", "GradCheckFailed: finite differences disagree with analytic gradients", 2);
    }
  } catch (const ValidationError& e) {
    return fail("validation", e.what(), 1);
  } catch (const NumericError& e) {
    return fail("numeric", e.what(), 2);
  }
  return 0;
}

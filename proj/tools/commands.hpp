// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "point2/config.hpp"

namespace point2::cli {

struct PhantomArgs {
  std::string out;
  std::optional<std::uint64_t> seed;
};
struct RenderArgs {
  std::string volume, out, pose_file, pose_json, view = "ap";
};
struct DatasetArgs {
  std::string out;
};
struct TrainArgs {
  std::string dataset, params, curve;
};
struct TrackArgs {
  std::string dataset, params, split = "test", out;
};
struct RegisterArgs {
  std::string dataset, params, split = "test", out;
  bool oracle = false;
};
struct EvalArgs {
  std::string records, out;
};
struct AblationArgs {
  std::string dataset, out, tracked_dir;
};
struct GradcheckArgs {
  int seeds = 3;
};

void run_phantom(const RunConfig& cfg, const PhantomArgs& a, std::ostream& log);
void run_render(const RunConfig& cfg, const RenderArgs& a, std::ostream& log);
void run_dataset(const RunConfig& cfg, const DatasetArgs& a, std::ostream& log);
void run_train(const RunConfig& cfg, const TrainArgs& a, std::ostream& log);
void run_track(const RunConfig& cfg, const TrackArgs& a, std::ostream& log);
void run_register(const RunConfig& cfg, const RegisterArgs& a, std::ostream& log);
void run_eval(const RunConfig& cfg, const EvalArgs& a, std::ostream& log);
void run_ablation(const RunConfig& cfg, const AblationArgs& a, std::ostream& log);
/// Returns false when any check fails.
bool run_gradcheck(const RunConfig& cfg, const GradcheckArgs& a, std::ostream& log);

}  // namespace point2::cli

// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/config.hpp"

#include "json_convert.hpp"
#include "point2/errors.hpp"
#include "point2/io.hpp"

namespace point2 {

using detail::json;

namespace {

void apply_override(json& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + spec + "' must be section.key=value");
  const std::string path = spec.substr(0, eq);
  const std::string text = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + spec + "' has an empty key");
    if (!node->is_object()) throw ConfigError("override " + path + " descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) throw ConfigError(std::string(name) + " must be an object");
  return s;
}

std::string strip_prefix(const std::string& what) {
  const auto colon = what.find(": ");
  return colon == std::string::npos ? what : what.substr(colon + 2);
}

}  // namespace

void RunConfig::validate() const {
  try {
    geometry.validate();
  } catch (const InvalidGeometry& e) {
    throw InvalidGeometry("geometry." + strip_prefix(e.what()));
  }
  phantom.validate();
  dataset.validate();
  if (dataset.ray.step_mm < 0.0) throw ConfigError("dataset.ray_step_mm must be >= 0 (0 selects half the spacing)");
  tracknet.validate();
  train.validate();
  loss.validate();
  const int mult = 1 << tracknet.depth;
  if (geometry.det_w % mult != 0 || geometry.det_h % mult != 0) {
    throw ConfigError("geometry.det_px must be divisible by 2^tracknet.depth");
  }
}

RunConfig parse_run_config(const std::string& json_text, const std::vector<std::string>& overrides) {
  json root;
  try {
    root = json_text.empty() ? json::object() : json::parse(json_text);
  } catch (const json::exception&) {
    throw ConfigError("config is not valid JSON");
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& o : overrides) apply_override(root, o);

  static const char* known[] = {"geometry", "phantom", "dataset", "tracknet", "train", "loss", "paths"};
  for (const auto& [key, _] : root.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config section " + key);
  }

  RunConfig cfg;
  cfg.geometry = detail::geometry_from(section(root, "geometry"), "geometry");
  cfg.phantom = detail::phantom_from(section(root, "phantom"), "phantom");
  cfg.dataset = detail::dataset_from(section(root, "dataset"), "dataset");
  cfg.dataset.phantom = cfg.phantom;
  cfg.dataset.geom = cfg.geometry;
  cfg.tracknet = detail::tracknet_from(section(root, "tracknet"), "tracknet");
  cfg.train = detail::train_from(section(root, "train"), "train");
  detail::read_field(section(root, "loss"), "w", cfg.loss.w, "loss");
  if (section(root, "train").contains("w")) {
    throw ConfigError("train.w is set through loss.w");
  }
  cfg.train.w = cfg.loss.w;
  const json& paths = section(root, "paths");
  detail::read_field(paths, "out_dir", cfg.paths.out_dir, "paths");
  detail::read_field(paths, "dataset_dir", cfg.paths.dataset_dir, "paths");
  detail::read_field(paths, "params", cfg.paths.params, "paths");
  detail::read_field(paths, "records", cfg.paths.records, "paths");
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  return parse_run_config(io::read_text(path), overrides);
}

RunConfig default_run_config(const std::vector<std::string>& overrides) { return parse_run_config("", overrides); }

std::string run_config_to_json(const RunConfig& cfg) {
  json ds = detail::to_json(cfg.dataset);
  ds.erase("phantom");
  ds.erase("geometry");
  json train = detail::to_json(cfg.train);
  train.erase("w");
  const json root{{"geometry", detail::to_json(cfg.geometry)},
                  {"phantom", detail::to_json(cfg.phantom)},
                  {"dataset", ds},
                  {"tracknet", detail::to_json(cfg.tracknet)},
                  {"train", train},
                  {"loss", {{"w", cfg.loss.w}}},
                  {"paths",
                   {{"out_dir", cfg.paths.out_dir},
                    {"dataset_dir", cfg.paths.dataset_dir},
                    {"params", cfg.paths.params},
                    {"records", cfg.paths.records}}}};
  return root.dump(2) + "\n";
}

}  // namespace point2

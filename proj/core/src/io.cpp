// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#include "point2/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json_convert.hpp"
#include "point2/errors.hpp"

namespace point2::io {

namespace fs = std::filesystem;
using detail::json;

namespace {

std::uint32_t byteswap32(std::uint32_t x) {
  return (x >> 24) | ((x >> 8) & 0xff00u) | ((x << 8) & 0xff0000u) | (x << 24);
}

void write_f32(std::ostream& os, const float* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t w = byteswap32(std::bit_cast<std::uint32_t>(data[i]));
      os.write(reinterpret_cast<const char*>(&w), sizeof w);
    }
  }
}

void read_f32(std::istream& is, float* data, std::size_t n, const std::string& path) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(is.gcount()) != n * sizeof(float)) {
    throw IoError(path + " is shorter than its sidecar declares");
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(data[i])));
  }
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw IoError("cannot open " + path + " for writing");
  return os;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw IoError("cannot open " + path);
  return is;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(what + " is not valid JSON");
  }
}

json read_json_file(const std::string& path) { return parse_json(read_text(path), path); }

void write_raw(const std::vector<float>& data, const std::string& path) {
  std::ofstream os = open_out(path, true);
  write_f32(os, data.data(), data.size());
  if (!os) throw IoError("failed writing " + path);
}

std::vector<float> read_raw(const std::string& path, std::size_t n) {
  std::ifstream is = open_in(path, true);
  std::vector<float> data(n);
  read_f32(is, data.data(), n, path);
  return data;
}

// Full round-trip precision for doubles in CSV output.
std::ostream& precise(std::ostream& os) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  return os;
}

json px_list(const std::vector<Vec2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x(), p.y()});
  return a;
}

std::vector<Vec2> px_list_from(const json& j) {
  std::vector<Vec2> out;
  for (const auto& p : j) out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return out;
}

json points_json(const PointSet& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(detail::vec3_json(p));
  return a;
}

PointSet points_from(const json& j, const std::string& where) {
  PointSet out;
  for (const auto& p : j) out.push_back(detail::vec3_from(p, where));
  return out;
}

}  // namespace

std::string strip_extension(const std::string& path) {
  fs::path p(path);
  const std::string ext = p.extension().string();
  if (ext == ".raw" || ext == ".json" || ext == ".bin") p.replace_extension();
  return p.string();
}

std::string read_text(const std::string& path) {
  std::ifstream is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream os = open_out(path);
  os << text;
  if (!os) throw IoError("failed writing " + path);
}

void write_volume(const VoxelVolume& vol, const std::string& base) {
  const std::string b = strip_extension(base);
  if (vol.data.size() != static_cast<std::size_t>(vol.dims[0]) * vol.dims[1] * vol.dims[2]) {
    throw BadShape("volume data size does not match dims");
  }
  write_raw(vol.data, b + ".raw");
  write_text(json{{"dims", vol.dims}, {"spacing_mm", vol.spacing_mm}}.dump(2) + "\n", b + ".json");
}

VoxelVolume read_volume(const std::string& base) {
  const std::string b = strip_extension(base);
  const json side = read_json_file(b + ".json");
  VoxelVolume vol;
  try {
    vol.dims = side.at("dims").get<std::array<int, 3>>();
    vol.spacing_mm = side.at("spacing_mm").get<double>();
  } catch (const json::exception&) {
    throw IoError(b + ".json needs dims [3] and spacing_mm");
  }
  for (int d : vol.dims) {
    if (d < 1) throw IoError(b + ".json has a non-positive dimension");
  }
  vol.data = read_raw(b + ".raw", static_cast<std::size_t>(vol.dims[0]) * vol.dims[1] * vol.dims[2]);
  return vol;
}

void write_image(const Image& img, const std::string& base) {
  const std::string b = strip_extension(base);
  if (img.data.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw BadShape("image data size does not match width x height");
  }
  write_raw(img.data, b + ".raw");
  write_text(json{{"width", img.width}, {"height", img.height}, {"pixel_spacing_mm", img.pixel_spacing_mm}}.dump(2) +
                 "\n",
             b + ".json");
}

Image read_image(const std::string& base) {
  const std::string b = strip_extension(base);
  const json side = read_json_file(b + ".json");
  Image img;
  try {
    img.width = side.at("width").get<int>();
    img.height = side.at("height").get<int>();
    img.pixel_spacing_mm = side.at("pixel_spacing_mm").get<double>();
  } catch (const json::exception&) {
    throw IoError(b + ".json needs width, height and pixel_spacing_mm");
  }
  if (img.width < 1 || img.height < 1) throw IoError(b + ".json has a non-positive size");
  img.data = read_raw(b + ".raw", static_cast<std::size_t>(img.width) * img.height);
  return img;
}

void write_params(const NetworkParams& params, const std::string& base) {
  const std::string b = strip_extension(base);
  std::ofstream os = open_out(b + ".bin", true);
  json tensors = json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const auto& t = params.tensors[i];
    std::vector<float> f(t->value.begin(), t->value.end());
    write_f32(os, f.data(), f.size());
    tensors.push_back({{"name", params.names[i]}, {"shape", t->shape}, {"offset", offset}, {"count", f.size()}});
    offset += f.size() * sizeof(float);
  }
  if (!os) throw IoError("failed writing " + b + ".bin");
  const json manifest{{"config", detail::to_json(params.config)}, {"tensors", tensors}};
  write_text(manifest.dump(2) + "\n", b + ".json");
}

NetworkParams read_params(const std::string& base) {
  const std::string b = strip_extension(base);
  const json manifest = read_json_file(b + ".json");
  if (!manifest.contains("config") || !manifest.contains("tensors")) {
    throw IoError(b + ".json needs config and tensors");
  }
  const TrackNetConfig cfg = detail::tracknet_from(manifest.at("config"), "config");
  NetworkParams params = NetworkParams::zeros(cfg);
  std::ifstream is = open_in(b + ".bin", true);
  for (const auto& entry : manifest.at("tensors")) {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    try {
      name = entry.at("name").get<std::string>();
      shape = entry.at("shape").get<std::vector<int>>();
      offset = entry.at("offset").get<std::size_t>();
    } catch (const json::exception&) {
      throw IoError(b + ".json has a malformed tensor entry");
    }
    const ag::Var& t = params.get(name);
    if (t->shape != shape) throw ShapeMismatch("tensor " + name + " shape differs from its config");
    std::vector<float> f(t->value.size());
    is.seekg(static_cast<std::streamoff>(offset));
    read_f32(is, f.data(), f.size(), b + ".bin");
    for (std::size_t k = 0; k < f.size(); ++k) t->value[k] = f[k];
  }
  return params;
}

std::string pose_to_json(const RigidPose& pose) { return detail::to_json(pose).dump(); }

RigidPose pose_from_json(const std::string& text) { return detail::pose_from(parse_json(text, "pose"), "pose"); }

std::string geometry_to_json(const ImagingGeometry& geom) { return detail::to_json(geom).dump(); }

ImagingGeometry geometry_from_json(const std::string& text) {
  return detail::geometry_from(parse_json(text, "geometry"), "geometry");
}

void write_points_csv(const PointSet& pts, const std::string& path) {
  std::ofstream os = open_out(path);
  precise(os) << "index,x_mm,y_mm,z_mm\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    os << i << ',' << pts[i].x() << ',' << pts[i].y() << ',' << pts[i].z() << '\n';
  }
}

PointSet read_points_csv(const std::string& path) {
  std::ifstream is = open_in(path);
  std::string line;
  std::getline(is, line);
  PointSet pts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(ls, field, ',')) {
      try {
        vals.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw IoError(path + ": bad number '" + field + "'");
      }
    }
    if (vals.size() != 4) throw IoError(path + ": expected index,x_mm,y_mm,z_mm");
    pts.emplace_back(vals[1], vals[2], vals[3]);
  }
  return pts;
}

std::string record_to_json(const RegistrationRecord& rec) {
  json tracked = json::array();
  for (const auto& view : rec.tracked_px) {
    json a = json::array();
    for (const auto& p : view) a.push_back(p ? json::array({p->x(), p->y()}) : json(nullptr));
    tracked.push_back(a);
  }
  json gt = json::array();
  for (const auto& view : rec.gt_px) gt.push_back(px_list(view));
  const json j{{"case_id", rec.case_id},
               {"gt_pose", detail::to_json(rec.gt_pose)},
               {"est_pose", detail::to_json(rec.est_pose)},
               {"initial_pose", detail::to_json(rec.initial_pose)},
               {"tracked_px", tracked},
               {"gt_px", gt},
               {"triangulated", points_json(rec.triangulated)},
               {"mtre_initial", rec.mtre_initial},
               {"mtre_final", rec.mtre_final},
               {"time_s", rec.time_s},
               {"pose_evaluations", rec.pose_evaluations},
               {"success", rec.success},
               {"failure", rec.failure}};
  return j.dump();
}

RegistrationRecord record_from_json(const std::string& line) {
  const json j = parse_json(line, "record");
  RegistrationRecord rec;
  try {
    rec.case_id = j.at("case_id").get<std::string>();
    rec.gt_pose = detail::pose_from(j.at("gt_pose"), "gt_pose");
    rec.est_pose = detail::pose_from(j.at("est_pose"), "est_pose");
    rec.initial_pose = detail::pose_from(j.at("initial_pose"), "initial_pose");
    for (const auto& view : j.at("tracked_px")) {
      std::vector<std::optional<Vec2>> v;
      for (const auto& p : view) {
        if (p.is_null()) {
          v.emplace_back();
        } else {
          v.emplace_back(Vec2(p.at(0).get<double>(), p.at(1).get<double>()));
        }
      }
      rec.tracked_px.push_back(std::move(v));
    }
    for (const auto& view : j.at("gt_px")) rec.gt_px.push_back(px_list_from(view));
    rec.triangulated = points_from(j.at("triangulated"), "triangulated");
    rec.mtre_initial = j.at("mtre_initial").get<double>();
    rec.mtre_final = j.at("mtre_final").get<double>();
    rec.time_s = j.at("time_s").get<double>();
    rec.pose_evaluations = j.at("pose_evaluations").get<int>();
    rec.success = j.at("success").get<bool>();
    rec.failure = j.at("failure").get<std::string>();
  } catch (const json::exception&) {
    throw IoError("record is missing fields or has wrong types");
  }
  return rec;
}

void write_records(const std::vector<RegistrationRecord>& recs, const std::string& path) {
  std::ofstream os = open_out(path);
  for (const auto& r : recs) os << record_to_json(r) << '\n';
  if (!os) throw IoError("failed writing " + path);
}

std::vector<RegistrationRecord> read_records(const std::string& path) {
  std::ifstream is = open_in(path);
  std::vector<RegistrationRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(record_from_json(line));
  }
  return out;
}

void write_metrics_csv(const MetricsSummary& m, const std::string& path) {
  std::ofstream os = open_out(path);
  precise(os) << "count,mtre_p50_mm,mtre_p75_mm,mtre_p95_mm,gfr,mean_time_s,initial_mtre_p50_mm\n";
  os << m.count << ',' << m.mtre_p50 << ',' << m.mtre_p75 << ',' << m.mtre_p95 << ',' << m.gfr << ','
     << m.mean_time_s << ',' << m.initial_p50 << '\n';
}

void write_loss_curve_csv(const std::vector<LossCurveRow>& rows, const std::string& path) {
  std::ofstream os = open_out(path);
  precise(os) << "epoch,stage,loss,bce_term,tri_term\n";
  for (const auto& r : rows) os << r.epoch << ',' << r.stage << ',' << r.loss << ',' << r.bce << ',' << r.tri << '\n';
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  std::ofstream os = open_out(path);
  precise(os) << "row,kernel_size,poi_type,weight,mpd_mm\n";
  for (const auto& r : rows) {
    const int k = 2 * r.setting.kernel_radius + 1;
    os << r.index << ',' << k << 'x' << k << ',' << detail::strategy_name(r.setting.strategy) << ','
       << (r.setting.use_weight ? "yes" : "no") << ',' << r.mpd_mm << '\n';
  }
}

void write_tracked_csv(const std::vector<TrackedPair>& pairs, const std::string& path) {
  std::ofstream os = open_out(path);
  precise(os) << "case_id,view,poi,tracked_u,tracked_v,gt_u,gt_v\n";
  for (const auto& p : pairs) {
    os << p.case_id << ',' << p.view << ',' << p.poi << ',' << p.tracked_px.x() << ',' << p.tracked_px.y() << ','
       << p.gt_px.x() << ',' << p.gt_px.y() << '\n';
  }
}

std::vector<TrackedPair> read_tracked_csv(const std::string& path) {
  std::ifstream is = open_in(path);
  std::string line;
  std::getline(is, line);
  std::vector<TrackedPair> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 7) throw IoError(path + ": expected 7 columns");
    try {
      TrackedPair p;
      p.case_id = f[0];
      p.view = std::stoi(f[1]);
      p.poi = std::stoi(f[2]);
      p.tracked_px = {std::stod(f[3]), std::stod(f[4])};
      p.gt_px = {std::stod(f[5]), std::stod(f[6])};
      out.push_back(p);
    } catch (const std::exception&) {
      throw IoError(path + ": bad number in '" + line + "'");
    }
  }
  return out;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  json volumes = json::array();
  for (std::size_t v = 0; v < ds.volumes.size(); ++v) {
    const std::string name = "volumes/volume_" + std::to_string(v);
    write_volume(ds.volumes[v], dir + "/" + name);
    volumes.push_back({{"file", name + ".raw"},
                       {"seed", ds.volume_seeds[v]},
                       {"landmarks", points_json(ds.landmarks[v])}});
  }
  json cases = json::array();
  for (const auto& c : ds.cases) {
    const std::string stem = "cases/" + c.id;
    json views = json::array();
    json xrays = json::array();
    json gt2d = json::array();
    for (std::size_t i = 0; i < c.data.views.size(); ++i) {
      views.push_back(detail::to_json(c.data.views[i].pose));
      const std::string xname = stem + "_xray" + std::to_string(i);
      write_image(c.data.xrays[i], dir + "/" + xname);
      xrays.push_back(xname + ".raw");
      gt2d.push_back(px_list(c.data.gt_2d_mm[i]));
    }
    const json cj{{"id", c.id},
                  {"volume", c.volume},
                  {"split", split_name(c.split)},
                  {"seed", c.seed},
                  {"gt_pose", detail::to_json(c.data.gt_pose)},
                  {"initial_pose", detail::to_json(c.data.initial_pose)},
                  {"views", views},
                  {"xrays", xrays},
                  {"gt_2d_mm", gt2d},
                  {"ct_pois", points_json(c.data.ct_pois)},
                  {"gt_3d", points_json(c.data.gt_3d)}};
    write_text(cj.dump(2) + "\n", dir + "/" + stem + ".json");
    cases.push_back({{"id", c.id}, {"file", stem + ".json"}, {"split", split_name(c.split)}, {"seed", c.seed}});
  }
  const json manifest{{"spec", detail::to_json(ds.spec)}, {"volumes", volumes}, {"cases", cases}};
  write_text(manifest.dump(2) + "\n", dir + "/manifest.json");
}

Dataset read_dataset(const std::string& dir) {
  const json manifest = read_json_file(dir + "/manifest.json");
  Dataset ds;
  try {
    ds.spec = detail::dataset_from(manifest.at("spec"), "spec");
    for (const auto& v : manifest.at("volumes")) {
      ds.volumes.push_back(read_volume(dir + "/" + v.at("file").get<std::string>()));
      ds.volume_seeds.push_back(v.at("seed").get<std::uint64_t>());
      ds.landmarks.push_back(points_from(v.at("landmarks"), "landmarks"));
    }
    for (const auto& entry : manifest.at("cases")) {
      const json cj = read_json_file(dir + "/" + entry.at("file").get<std::string>());
      DatasetCase c;
      c.id = cj.at("id").get<std::string>();
      c.volume = cj.at("volume").get<int>();
      c.split = split_from_name(cj.at("split").get<std::string>());
      c.seed = cj.at("seed").get<std::uint64_t>();
      if (c.volume < 0 || static_cast<std::size_t>(c.volume) >= ds.volumes.size()) {
        throw IoError("case " + c.id + " references a missing volume");
      }
      c.data.gt_pose = detail::pose_from(cj.at("gt_pose"), "gt_pose");
      c.data.initial_pose = detail::pose_from(cj.at("initial_pose"), "initial_pose");
      for (const auto& v : cj.at("views")) c.data.views.push_back(ViewPose{detail::pose_from(v, "views")});
      for (const auto& x : cj.at("xrays")) c.data.xrays.push_back(read_image(dir + "/" + x.get<std::string>()));
      for (const auto& g : cj.at("gt_2d_mm")) c.data.gt_2d_mm.push_back(px_list_from(g));
      c.data.ct_pois = points_from(cj.at("ct_pois"), "ct_pois");
      c.data.gt_3d = points_from(cj.at("gt_3d"), "gt_3d");
      ds.cases.push_back(std::move(c));
    }
  } catch (const json::exception&) {
    throw IoError(dir + "/manifest.json or a case file is missing fields");
  }
  return ds;
}

}  // namespace point2::io

#include "ugs/train/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>

#include "ugs/core/error.hpp"

namespace ugs {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'U', 'G', 'S', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

std::string fp_to_string(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double fp_from_string(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

json camera_to_json(const Camera& c) {
  json j;
  j["fx"] = c.fx;
  j["fy"] = c.fy;
  j["cx"] = c.cx;
  j["cy"] = c.cy;
  j["width"] = c.width;
  j["height"] = c.height;
  j["near_clip"] = c.near_clip;
  json m = json::array();
  for (int r = 0; r < 4; ++r)
    for (int col = 0; col < 4; ++col) m.push_back(c.world_to_camera(r, col));
  j["world_to_camera"] = m;
  return j;
}

Camera camera_from_json(const json& j) {
  Camera c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.near_clip = j.at("near_clip").get<double>();
  const json& m = j.at("world_to_camera");
  for (int r = 0; r < 4; ++r)
    for (int col = 0; col < 4; ++col)
      c.world_to_camera(r, col) = m[4 * r + col].get<double>();
  return c;
}

const char* eval_mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::kStochastic:
      return "stochastic";
    case EvalMode::kOff:
      return "off";
    default:
      return "deterministic_q_half";
  }
}

EvalMode eval_mode_from(const std::string& s) {
  if (s == "stochastic") return EvalMode::kStochastic;
  if (s == "off") return EvalMode::kOff;
  if (s == "deterministic_q_half") return EvalMode::kDeterministicQHalf;
  throw Error(ErrorCode::kFormat, "unknown eval mode '" + s + "'");
}

class SectionWriter {
 public:
  void add(const std::string& name, const std::vector<double>& data) {
    sections_.emplace_back(name, data);
  }
  void write(std::ostream& out) const {
    const std::uint32_t n = static_cast<std::uint32_t>(sections_.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    for (const auto& [name, data] : sections_) {
      const std::uint32_t len = static_cast<std::uint32_t>(name.size());
      out.write(reinterpret_cast<const char*>(&len), sizeof(len));
      out.write(name.data(), len);
      const std::uint64_t bytes = data.size() * sizeof(double);
      out.write(reinterpret_cast<const char*>(&bytes), sizeof(bytes));
      out.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(bytes));
    }
  }

 private:
  std::vector<std::pair<std::string, std::vector<double>>> sections_;
};

class SectionReader {
 public:
  SectionReader(std::istream& in, const std::string& path) {
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in) throw Error(ErrorCode::kFormat, "truncated checkpoint: " + path);
    for (std::uint32_t s = 0; s < n; ++s) {
      std::uint32_t len = 0;
      in.read(reinterpret_cast<char*>(&len), sizeof(len));
      std::string name(len, '\0');
      in.read(name.data(), len);
      std::uint64_t bytes = 0;
      in.read(reinterpret_cast<char*>(&bytes), sizeof(bytes));
      if (!in || bytes % sizeof(double) != 0)
        throw Error(ErrorCode::kFormat, "truncated checkpoint: " + path);
      std::vector<double> data(bytes / sizeof(double));
      in.read(reinterpret_cast<char*>(data.data()),
              static_cast<std::streamsize>(bytes));
      if (!in) throw Error(ErrorCode::kFormat, "truncated checkpoint: " + path);
      sections_[name] = std::move(data);
    }
  }

  const std::vector<double>& get(const std::string& name) const {
    const auto it = sections_.find(name);
    if (it == sections_.end())
      throw Error(ErrorCode::kFormat, "checkpoint lacks section '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return sections_.count(name) > 0; }

 private:
  std::map<std::string, std::vector<double>> sections_;
};

void add_adam(SectionWriter& w, const std::string& name, const AdamState& a) {
  w.add(name + "/m", a.first_moment());
  w.add(name + "/v", a.second_moment());
}

AdamState read_adam(const SectionReader& r, const std::string& name,
                    std::int64_t steps) {
  AdamState a;
  a.first_moment() = r.get(name + "/m");
  a.second_moment() = r.get(name + "/v");
  if (a.first_moment().size() != a.second_moment().size())
    throw Error(ErrorCode::kFormat, "optimizer moments disagree: " + name);
  a.set_steps(steps);
  return a;
}

}  // namespace

void save_checkpoint(const Session& s, const std::filesystem::path& path) {
  json h;
  h["version"] = kVersion;
  h["scene_name"] = s.scene.metadata.name;
  h["sh_degree"] = s.scene.gaussians.sh_degree;
  h["n_gaussians"] = s.scene.gaussians.count();
  h["box_min"] = {s.scene.metadata.box_min[0], s.scene.metadata.box_min[1],
                  s.scene.metadata.box_min[2]};
  h["box_max"] = {s.scene.metadata.box_max[0], s.scene.metadata.box_max[1],
                  s.scene.metadata.box_max[2]};

  const EncodingConfig& e = s.encoding_config;
  h["encoding"] = {{"position_levels", e.position_levels},
                   {"scale_levels", e.scale_levels},
                   {"rotation_levels", e.rotation_levels},
                   {"view_levels", e.view_levels},
                   {"features_per_level", e.features_per_level},
                   {"base_resolution", e.base_resolution},
                   {"finest_resolution", e.finest_resolution},
                   {"log2_table_size", e.log2_table_size}};

  const SoftDropConfig& sd = s.softdrop;
  h["softdrop"] = {{"temperature", sd.temperature},
                   {"clamp_min", sd.clamp_min},
                   {"clamp_max", sd.clamp_max},
                   {"eval_mode", eval_mode_name(sd.eval_mode)}};

  const TrainConfig& c = s.config;
  h["train"] = {{"iterations", c.iterations},
                {"lambda_dssim", c.lambda_dssim},
                {"freeze_epsilon", c.freeze_epsilon},
                {"freeze_check_interval", c.freeze_check_interval},
                {"lr_position", c.lr_position},
                {"lr_position_final", c.lr_position_final},
                {"lr_rotation", c.lr_rotation},
                {"lr_log_scale", c.lr_log_scale},
                {"lr_opacity", c.lr_opacity},
                {"lr_colour", c.lr_colour},
                {"lr_mlp", c.lr_mlp},
                {"lr_tables", c.lr_tables},
                {"prune_opacity_threshold", c.prune_opacity_threshold},
                {"prune_interval", c.prune_interval},
                {"prune_disable_last_fraction", c.prune_disable_last_fraction},
                {"seed", c.seed},
                {"threads", c.threads},
                {"background", {c.background[0], c.background[1], c.background[2]}},
                {"enable_uncertainty", c.enable_uncertainty},
                {"enable_modulation", c.enable_modulation},
                {"enable_dropout", c.enable_dropout}};

  h["net"] = {{"widths", s.net->widths()}, {"frozen", s.net->frozen()}};
  h["state"] = {
      {"iteration", s.state.iteration},
      {"best_psnr", fp_to_string(s.state.best_psnr_at_last_check)},
      {"adam_steps",
       {{"positions", s.state.adam_positions.steps()},
        {"rotations", s.state.adam_rotations.steps()},
        {"log_scales", s.state.adam_log_scales.steps()},
        {"opacities", s.state.adam_opacities.steps()},
        {"colours", s.state.adam_colours.steps()},
        {"mlp", s.state.adam_mlp.steps()},
        {"tables", json::array()}}}};
  for (const AdamState& a : s.state.adam_tables)
    h["state"]["adam_steps"]["tables"].push_back(a.steps());

  json views = json::array();
  for (int split = 0; split < 2; ++split) {
    const auto& list = split ? s.scene.test_views : s.scene.train_views;
    for (const View& v : list) {
      json jv;
      jv["split"] = split ? "test" : "train";
      jv["camera"] = camera_to_json(v.camera);
      views.push_back(jv);
    }
  }
  h["views"] = views;

  SectionWriter w;
  const GaussianSet& g = s.scene.gaussians;
  w.add("gaussians/positions", g.positions);
  w.add("gaussians/rotations", g.rotations);
  w.add("gaussians/log_scales", g.log_scales);
  w.add("gaussians/opacity_logits", g.opacity_logits);
  w.add("gaussians/colours", g.colours);
  w.add("net/params", s.net->parameters());
  const auto grids = s.encoder->grids();
  for (std::size_t slot = 0; slot < grids.size(); ++slot)
    if (grids[slot])
      w.add("grid" + std::to_string(slot) + "/tables", grids[slot]->tables());

  add_adam(w, "adam/positions", s.state.adam_positions);
  add_adam(w, "adam/rotations", s.state.adam_rotations);
  add_adam(w, "adam/log_scales", s.state.adam_log_scales);
  add_adam(w, "adam/opacities", s.state.adam_opacities);
  add_adam(w, "adam/colours", s.state.adam_colours);
  add_adam(w, "adam/mlp", s.state.adam_mlp);
  for (std::size_t slot = 0; slot < s.state.adam_tables.size(); ++slot)
    add_adam(w, "adam/tables" + std::to_string(slot),
             s.state.adam_tables[slot]);

  int view_id = 0;
  for (int split = 0; split < 2; ++split) {
    const auto& list = split ? s.scene.test_views : s.scene.train_views;
    for (const View& v : list)
      w.add("view" + std::to_string(view_id++) + "/image", v.image.pixels);
  }

  std::vector<double> log_rows;
  log_rows.reserve(s.state.metric_log.size() * 8);
  for (const MetricRow& r : s.state.metric_log) {
    log_rows.push_back(r.iteration);
    log_rows.push_back(r.loss);
    log_rows.push_back(r.l1);
    log_rows.push_back(r.dssim);
    log_rows.push_back(r.train_psnr);
    log_rows.push_back(r.test_psnr);
    log_rows.push_back(static_cast<double>(r.n_gaussians));
    log_rows.push_back(r.frozen ? 1.0 : 0.0);
  }
  w.add("metric_log", log_rows);

  const std::string header = h.dump();
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(ErrorCode::kIo, "cannot open '" + tmp.string() + "' for write");
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    const std::uint64_t hlen = header.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header.data(), static_cast<std::streamsize>(hlen));
    w.write(out);
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Session load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::kIo, "cannot open checkpoint '" + path.string() + "'");

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCode::kFormat,
                "'" + path.string() + "' is not a checkpoint (bad magic)");
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion)
    throw Error(ErrorCode::kFormat,
                "checkpoint version mismatch: file has " +
                    std::to_string(version) + ", expected " +
                    std::to_string(kVersion));
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen > (1ull << 30))
    throw Error(ErrorCode::kFormat, "truncated checkpoint: " + path.string());
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw Error(ErrorCode::kFormat, "truncated checkpoint: " + path.string());

  json h;
  try {
    h = json::parse(header);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat,
                "bad checkpoint header: " + std::string(e.what()));
  }

  SectionReader r(in, path.string());

  Session s;
  try {
    s.scene.metadata.name = h.at("scene_name").get<std::string>();
    for (int k = 0; k < 3; ++k) {
      s.scene.metadata.box_min[k] = h.at("box_min")[k].get<double>();
      s.scene.metadata.box_max[k] = h.at("box_max")[k].get<double>();
    }

    GaussianSet& g = s.scene.gaussians;
    g.sh_degree = h.at("sh_degree").get<int>();
    g.positions = r.get("gaussians/positions");
    g.rotations = r.get("gaussians/rotations");
    g.log_scales = r.get("gaussians/log_scales");
    g.opacity_logits = r.get("gaussians/opacity_logits");
    g.colours = r.get("gaussians/colours");
    g.validate();

    const json& je = h.at("encoding");
    EncodingConfig e;
    e.position_levels = je.at("position_levels").get<int>();
    e.scale_levels = je.at("scale_levels").get<int>();
    e.rotation_levels = je.at("rotation_levels").get<int>();
    e.view_levels = je.at("view_levels").get<int>();
    e.features_per_level = je.at("features_per_level").get<int>();
    e.base_resolution = je.at("base_resolution").get<int>();
    e.finest_resolution = je.at("finest_resolution").get<int>();
    e.log2_table_size = je.at("log2_table_size").get<int>();
    s.encoding_config = e;

    const json& jsd = h.at("softdrop");
    s.softdrop.temperature = jsd.at("temperature").get<double>();
    s.softdrop.clamp_min = jsd.at("clamp_min").get<double>();
    s.softdrop.clamp_max = jsd.at("clamp_max").get<double>();
    s.softdrop.eval_mode =
        eval_mode_from(jsd.at("eval_mode").get<std::string>());

    const json& jc = h.at("train");
    TrainConfig& c = s.config;
    c.iterations = jc.at("iterations").get<int>();
    c.lambda_dssim = jc.at("lambda_dssim").get<double>();
    c.freeze_epsilon = jc.at("freeze_epsilon").get<double>();
    c.freeze_check_interval = jc.at("freeze_check_interval").get<int>();
    c.lr_position = jc.at("lr_position").get<double>();
    c.lr_position_final = jc.at("lr_position_final").get<double>();
    c.lr_rotation = jc.at("lr_rotation").get<double>();
    c.lr_log_scale = jc.at("lr_log_scale").get<double>();
    c.lr_opacity = jc.at("lr_opacity").get<double>();
    c.lr_colour = jc.at("lr_colour").get<double>();
    c.lr_mlp = jc.at("lr_mlp").get<double>();
    c.lr_tables = jc.at("lr_tables").get<double>();
    c.prune_opacity_threshold = jc.at("prune_opacity_threshold").get<double>();
    c.prune_interval = jc.at("prune_interval").get<int>();
    c.prune_disable_last_fraction =
        jc.at("prune_disable_last_fraction").get<double>();
    c.seed = jc.at("seed").get<std::uint64_t>();
    c.threads = jc.at("threads").get<int>();
    for (int k = 0; k < 3; ++k)
      c.background[k] = jc.at("background")[k].get<double>();
    c.enable_uncertainty = jc.at("enable_uncertainty").get<bool>();
    c.enable_modulation = jc.at("enable_modulation").get<bool>();
    c.enable_dropout = jc.at("enable_dropout").get<bool>();

    s.encoder = std::make_unique<InputEncoder>(
        e, s.scene.metadata.box_min, s.scene.metadata.box_max,
        (s.scene.metadata.box_max - s.scene.metadata.box_min).maxCoeff());
    const auto grids = s.encoder->grids();
    for (std::size_t slot = 0; slot < grids.size(); ++slot) {
      if (!grids[slot]) continue;
      const auto& data = r.get("grid" + std::to_string(slot) + "/tables");
      if (data.size() != grids[slot]->tables().size())
        throw Error(ErrorCode::kFormat, "grid table size mismatch");
      grids[slot]->tables() = data;
    }

    const json& jn = h.at("net");
    s.net = std::make_unique<UncertaintyNet>(
        jn.at("widths").get<std::vector<int>>());
    const auto& params = r.get("net/params");
    if (params.size() != s.net->parameter_count())
      throw Error(ErrorCode::kFormat, "net parameter count mismatch");
    s.net->parameters() = params;
    s.net->set_frozen(jn.at("frozen").get<bool>());

    const json& jst = h.at("state");
    s.state.iteration = jst.at("iteration").get<int>();
    s.state.best_psnr_at_last_check =
        fp_from_string(jst.at("best_psnr").get<std::string>());
    const json& steps = jst.at("adam_steps");
    s.state.adam_positions =
        read_adam(r, "adam/positions", steps.at("positions").get<std::int64_t>());
    s.state.adam_rotations =
        read_adam(r, "adam/rotations", steps.at("rotations").get<std::int64_t>());
    s.state.adam_log_scales = read_adam(
        r, "adam/log_scales", steps.at("log_scales").get<std::int64_t>());
    s.state.adam_opacities = read_adam(
        r, "adam/opacities", steps.at("opacities").get<std::int64_t>());
    s.state.adam_colours =
        read_adam(r, "adam/colours", steps.at("colours").get<std::int64_t>());
    s.state.adam_mlp =
        read_adam(r, "adam/mlp", steps.at("mlp").get<std::int64_t>());
    const json& table_steps = steps.at("tables");
    for (std::size_t slot = 0; slot < grids.size(); ++slot)
      s.state.adam_tables.push_back(
          read_adam(r, "adam/tables" + std::to_string(slot),
                    table_steps[slot].get<std::int64_t>()));

    int view_id = 0;
    for (const json& jv : h.at("views")) {
      View v;
      v.camera = camera_from_json(jv.at("camera"));
      v.image.width = v.camera.width;
      v.image.height = v.camera.height;
      v.image.pixels = r.get("view" + std::to_string(view_id++) + "/image");
      if (v.image.pixels.size() != 3 * v.image.pixel_count())
        throw Error(ErrorCode::kFormat, "view image size mismatch");
      if (jv.at("split").get<std::string>() == "test")
        s.scene.test_views.push_back(std::move(v));
      else
        s.scene.train_views.push_back(std::move(v));
    }

    const auto& log_rows = r.get("metric_log");
    if (log_rows.size() % 8 != 0)
      throw Error(ErrorCode::kFormat, "metric log section malformed");
    for (std::size_t i = 0; i < log_rows.size(); i += 8) {
      MetricRow row;
      row.iteration = static_cast<int>(log_rows[i]);
      row.loss = log_rows[i + 1];
      row.l1 = log_rows[i + 2];
      row.dssim = log_rows[i + 3];
      row.train_psnr = log_rows[i + 4];
      row.test_psnr = log_rows[i + 5];
      row.n_gaussians = static_cast<std::size_t>(log_rows[i + 6]);
      row.frozen = log_rows[i + 7] != 0.0;
      s.state.metric_log.push_back(row);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat,
                "bad checkpoint header: " + std::string(e.what()));
  }
  return s;
}

}  // namespace ugs

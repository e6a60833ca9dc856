#include "nerfdyn/dataset.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "nerfdyn/errors.hpp"
#include "nerfdyn/random.hpp"

namespace nerfdyn {

using nlohmann::json;

void write_floats(const std::filesystem::path& path, const std::vector<float>& v) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!os) throw DataError("write failed: " + path.string());
}

std::vector<float> read_floats(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw DataError("cannot open: " + path.string());
  std::streamsize bytes = is.tellg();
  if (bytes % 4 != 0) throw DataError("float file size not a multiple of 4: " + path.string());
  std::vector<float> v(static_cast<std::size_t>(bytes / 4));
  is.seekg(0);
  is.read(reinterpret_cast<char*>(v.data()), bytes);
  if (!is) throw DataError("read failed: " + path.string());
  return v;
}

namespace {

std::string traj_dirname(int traj) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "traj_%04d", traj);
  return buf;
}
std::string state_filename(int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "state_%03d.bin", t);
  return buf;
}
std::string action_filename(int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "action_%03d.bin", t);
  return buf;
}
std::string image_filename(int t, int view) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "img_%03d_view%02d.ppm", t, view);
  return buf;
}

}  // namespace

void generate_dataset(const std::filesystem::path& root, const DatasetConfig& cfg) {
  if (cfg.n_traj < 1 || cfg.t_steps < 1 || cfg.n_views < 1)
    throw DataError("generate_dataset: counts must be positive");
  if (cfg.width < 16 || cfg.height < 16) throw DataError("generate_dataset: resolution below 16x16");
  EnvSpec env = EnvSpec::by_name(cfg.env);

  if (std::filesystem::exists(root)) {
    if (!cfg.force)
      throw DataError("output directory exists (use force to overwrite): " + root.string());
    std::filesystem::remove_all(root);
  }
  std::filesystem::create_directories(root);

  std::vector<CameraPose> cameras = env.make_training_cameras(cfg.n_views, cfg.width, cfg.height);

  json manifest;
  manifest["env"] = env.name;
  manifest["n_traj"] = cfg.n_traj;
  manifest["t_steps"] = cfg.t_steps;
  manifest["n_views"] = cfg.n_views;
  manifest["width"] = cfg.width;
  manifest["height"] = cfg.height;
  manifest["seed"] = cfg.seed;
  manifest["dt"] = env.dt;
  manifest["near"] = env.near;
  manifest["far"] = env.far;
  manifest["cam_radius"] = env.cam_radius;
  manifest["cam_elevation"] = env.cam_elevation;
  json cams = json::array();
  for (const CameraPose& c : cameras) {
    json jc;
    jc["matrix"] = c.flatten();
    jc["focal"] = c.focal;
    jc["width"] = c.width;
    jc["height"] = c.height;
    cams.push_back(jc);
  }
  manifest["cameras"] = cams;
  {
    std::ofstream os(root / "manifest");
    if (!os) throw DataError("cannot write manifest in " + root.string());
    os << manifest.dump(2) << "\n";
  }

  for (int traj = 0; traj < cfg.n_traj; ++traj) {
    RandomStream rng(seed_chain(cfg.seed, tag64("traj"), traj));
    std::filesystem::path dir = root / traj_dirname(traj);
    std::filesystem::create_directories(dir);

    RigidState state = env.sample_initial_state(rng);
    auto actions = env.sample_action_sequence(rng, cfg.t_steps - 1);
    for (int t = 0; t < cfg.t_steps; ++t) {
      write_floats(dir / state_filename(t), state.serialize());
      for (int v = 0; v < cfg.n_views; ++v)
        write_ppm(dir / image_filename(t, v), render_gt(env, state, cameras[v]));
      if (t < cfg.t_steps - 1) {
        write_floats(dir / action_filename(t), actions[t]);
        state = sim_step(env, state, actions[t]);
      }
    }
  }
}

Dataset Dataset::load(const std::filesystem::path& root) {
  std::ifstream is(root / "manifest");
  if (!is) throw DataError("missing dataset manifest in " + root.string());
  json manifest;
  try {
    is >> manifest;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest in " + root.string() + ": " + e.what());
  }

  Dataset ds;
  ds.cfg_.env = manifest.at("env").get<std::string>();
  ds.cfg_.n_traj = manifest.at("n_traj").get<int>();
  ds.cfg_.t_steps = manifest.at("t_steps").get<int>();
  ds.cfg_.n_views = manifest.at("n_views").get<int>();
  ds.cfg_.width = manifest.at("width").get<int>();
  ds.cfg_.height = manifest.at("height").get<int>();
  ds.cfg_.seed = manifest.at("seed").get<std::uint64_t>();
  ds.env_ = EnvSpec::by_name(ds.cfg_.env);

  for (const json& jc : manifest.at("cameras")) {
    std::array<float, 16> flat{};
    auto m = jc.at("matrix");
    for (int i = 0; i < 16; ++i) flat[i] = m.at(i).get<float>();
    ds.cameras_.push_back(CameraPose::from_flat(flat, jc.at("focal").get<float>(),
                                                jc.at("width").get<int>(), jc.at("height").get<int>()));
  }
  if (static_cast<int>(ds.cameras_.size()) != ds.cfg_.n_views)
    throw DataError("manifest camera count mismatch in " + root.string());

  const int T = ds.cfg_.t_steps, V = ds.cfg_.n_views;
  ds.states_.reserve(std::size_t(ds.cfg_.n_traj) * T);
  ds.actions_.reserve(std::size_t(ds.cfg_.n_traj) * (T - 1));
  ds.images_.reserve(std::size_t(ds.cfg_.n_traj) * T * V);
  for (int traj = 0; traj < ds.cfg_.n_traj; ++traj) {
    std::filesystem::path dir = root / traj_dirname(traj);
    for (int t = 0; t < T; ++t) {
      ds.states_.push_back(RigidState::deserialize(read_floats(dir / state_filename(t))));
      if (ds.states_.back().bodies.size() != ds.env_.bodies.size())
        throw DataError("state body count mismatch in " + dir.string());
      for (int v = 0; v < V; ++v) {
        Image im = read_ppm(dir / image_filename(t, v));
        if (im.width != ds.cfg_.width || im.height != ds.cfg_.height)
          throw DataError("image resolution mismatch in " + dir.string());
        ds.images_.push_back(quantize(im));
      }
      if (t < T - 1) ds.actions_.push_back(read_floats(dir / action_filename(t)));
    }
  }
  return ds;
}

const RigidState& Dataset::state(int traj, int t) const {
  return states_[std::size_t(traj) * cfg_.t_steps + t];
}

const std::vector<float>& Dataset::action(int traj, int t) const {
  return actions_[std::size_t(traj) * (cfg_.t_steps - 1) + t];
}

Image Dataset::image(int traj, int t, int view) const {
  const auto& bytes = images_[(std::size_t(traj) * cfg_.t_steps + t) * cfg_.n_views + view];
  return dequantize(bytes, cfg_.width, cfg_.height);
}

float Dataset::view_azimuth(int view) const {
  Vec3 eye = cameras_[view].eye();
  return std::atan2(eye.y, eye.x);
}

}  // namespace nerfdyn

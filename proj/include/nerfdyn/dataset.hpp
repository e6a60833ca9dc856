#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nerfdyn/camera.hpp"
#include "nerfdyn/image.hpp"
#include "nerfdyn/sim.hpp"

namespace nerfdyn {

struct DatasetConfig {
  std::string env = "push_box";
  int n_traj = 60;
  int t_steps = 40;
  int n_views = 8;
  int width = 48;
  int height = 48;
  std::uint64_t seed = 0;
  bool force = false;  // overwrite an existing output directory
};

// Layout on disk:
//   root/manifest                       JSON: env, counts, resolution, cameras, seed, dt
//   root/traj_%04d/state_%03d.bin       little-endian float32 body states
//   root/traj_%04d/action_%03d.bin     little-endian float32 actions (t -> t+1)
//   root/traj_%04d/img_%03d_view%02d.ppm
void generate_dataset(const std::filesystem::path& root, const DatasetConfig& cfg);

// In-memory view of a dataset. Images are kept 8-bit (exactly as stored).
class Dataset {
 public:
  static Dataset load(const std::filesystem::path& root);

  const EnvSpec& env() const { return env_; }
  const DatasetConfig& config() const { return cfg_; }
  const std::vector<CameraPose>& cameras() const { return cameras_; }
  int n_traj() const { return cfg_.n_traj; }
  int t_steps() const { return cfg_.t_steps; }
  int n_views() const { return cfg_.n_views; }
  int width() const { return cfg_.width; }
  int height() const { return cfg_.height; }

  const RigidState& state(int traj, int t) const;
  const std::vector<float>& action(int traj, int t) const;  // t in [0, t_steps-1)
  Image image(int traj, int t, int view) const;

  // Azimuth of a training view (used for the canonical view ordering).
  float view_azimuth(int view) const;

 private:
  EnvSpec env_;
  DatasetConfig cfg_;
  std::vector<CameraPose> cameras_;
  std::vector<RigidState> states_;                 // [traj * t_steps]
  std::vector<std::vector<float>> actions_;        // [traj * (t_steps-1)]
  std::vector<std::vector<std::uint8_t>> images_;  // [traj * t_steps * n_views]
};

// Raw little-endian float32 vector files.
void write_floats(const std::filesystem::path& path, const std::vector<float>& v);
std::vector<float> read_floats(const std::filesystem::path& path);

}  // namespace nerfdyn

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nerfdyn/dataset.hpp"
#include "nerfdyn/errors.hpp"

using namespace nerfdyn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("nerfdyn_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// Order-independent content digest of a directory tree.
std::size_t tree_digest(const fs::path& root) {
  std::size_t h = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::size_t fh = std::hash<std::string>{}(entry.path().filename().string());
    for (char c : slurp(entry.path())) fh = fh * 1099511628211ull + static_cast<unsigned char>(c);
    h ^= fh;
  }
  return h;
}

}  // namespace

TEST_CASE("dataset image count matches n_traj * t_steps * n_views") {
  auto root = temp_dir("count");
  DatasetConfig cfg;
  cfg.env = "push_box";
  cfg.n_traj = 2;
  cfg.t_steps = 5;
  cfg.n_views = 3;
  cfg.width = cfg.height = 24;
  cfg.seed = 12;
  generate_dataset(root, cfg);

  int images = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.path().extension() == ".ppm") ++images;
  CHECK(images == 2 * 5 * 3);
  fs::remove_all(root);
}

TEST_CASE("same seed produces byte-identical datasets") {
  auto r1 = temp_dir("det1"), r2 = temp_dir("det2");
  DatasetConfig cfg;
  cfg.env = "block_drop";
  cfg.n_traj = 2;
  cfg.t_steps = 4;
  cfg.n_views = 2;
  cfg.width = cfg.height = 20;
  cfg.seed = 99;
  generate_dataset(r1, cfg);
  generate_dataset(r2, cfg);
  CHECK(tree_digest(r1) == tree_digest(r2));
  fs::remove_all(r1);
  fs::remove_all(r2);
}

TEST_CASE("stored actions replay to the stored final state exactly") {
  auto root = temp_dir("replay");
  DatasetConfig cfg;
  cfg.env = "push_box";
  cfg.n_traj = 3;
  cfg.t_steps = 12;
  cfg.n_views = 1;
  cfg.width = cfg.height = 16;
  cfg.seed = 4;
  generate_dataset(root, cfg);

  Dataset ds = Dataset::load(root);
  for (int traj = 0; traj < ds.n_traj(); ++traj) {
    RigidState s = ds.state(traj, 0);
    for (int t = 0; t < ds.t_steps() - 1; ++t) s = sim_step(ds.env(), s, ds.action(traj, t));
    auto got = s.serialize();
    auto want = ds.state(traj, ds.t_steps() - 1).serialize();
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
  }
  fs::remove_all(root);
}

TEST_CASE("existing output directory is refused without force") {
  auto root = temp_dir("force");
  DatasetConfig cfg;
  cfg.n_traj = 1;
  cfg.t_steps = 2;
  cfg.n_views = 1;
  cfg.width = cfg.height = 16;
  generate_dataset(root, cfg);
  CHECK_THROWS_AS(generate_dataset(root, cfg), DataError);
  cfg.force = true;
  generate_dataset(root, cfg);  // succeeds
  fs::remove_all(root);
}

TEST_CASE("loaded dataset exposes consistent shapes and cameras") {
  auto root = temp_dir("load");
  DatasetConfig cfg;
  cfg.env = "push_box";
  cfg.n_traj = 2;
  cfg.t_steps = 3;
  cfg.n_views = 4;
  cfg.width = 20;
  cfg.height = 24;
  cfg.seed = 7;
  generate_dataset(root, cfg);

  Dataset ds = Dataset::load(root);
  CHECK(ds.n_traj() == 2);
  CHECK(ds.t_steps() == 3);
  CHECK(ds.n_views() == 4);
  CHECK(ds.cameras().size() == 4);
  Image im = ds.image(1, 2, 3);
  CHECK(im.width == 20);
  CHECK(im.height == 24);
  CHECK(ds.action(0, 0).size() == 2);
  CHECK(ds.state(1, 1).bodies.size() == 2);
  for (int v = 0; v < 4; ++v) CHECK(ds.cameras()[v].orthonormality_error() < 1e-5f);
  // Azimuths are equally spaced.
  float step = ds.view_azimuth(1) - ds.view_azimuth(0);
  CHECK(step == doctest::Approx(2.0 * M_PI / 4).epsilon(1e-4));
  fs::remove_all(root);
}

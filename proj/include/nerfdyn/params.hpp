#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nerfdyn/random.hpp"
#include "nerfdyn/tensor.hpp"

namespace nerfdyn {

// A learnable tensor plus its gradient accumulator and Adam moment state.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;  // first moment
  Tensor v;  // second moment

  explicit Parameter(std::string n, Tensor init)
      : name(std::move(n)),
        value(std::move(init)),
        grad(Tensor::zeros(value.shape)),
        m(Tensor::zeros(value.shape)),
        v(Tensor::zeros(value.shape)) {}

  void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), 0.0f); }
};

// Named parameter registry with stable addresses and insertion order.
class ParamStore {
 public:
  Parameter& create(const std::string& name, Tensor init);
  Parameter& create_normal(const std::string& name, std::vector<int> shape, float stddev, RandomStream& rng);
  Parameter& create_zeros(const std::string& name, std::vector<int> shape);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter*> all();
  std::vector<Parameter*> with_prefix(const std::string& prefix);
  std::size_t size() const { return items_.size(); }
  std::int64_t value_count() const;

  void zero_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  float lr = 5e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// One Adam update with bias correction; `step` is 1-based.
// Throws NumericalError naming the parameter when a gradient is non-finite.
void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg, std::int64_t step);

// Checkpoint container: magic, version, parameter count, then per parameter
// name length, UTF-8 name, rank, extents, raw little-endian float32 values.
// Round-trips are bit-exact.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& store);
void load_checkpoint(const std::filesystem::path& path, ParamStore& store);  // creates or overwrites entries

// Optimizer/train-progress sidecar (same record layout, different magic):
// Adam moments for every parameter plus the iteration counter.
void save_train_state(const std::filesystem::path& path, const ParamStore& store, std::int64_t iter);
std::int64_t load_train_state(const std::filesystem::path& path, ParamStore& store);

}  // namespace nerfdyn

#include "nerfdyn/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "nerfdyn/errors.hpp"

namespace nerfdyn {

Parameter& ParamStore::create(const std::string& name, Tensor init) {
  if (index_.count(name)) throw Error("ParamStore: duplicate parameter '" + name + "'");
  items_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  index_[name] = items_.size() - 1;
  return *items_.back();
}

Parameter& ParamStore::create_normal(const std::string& name, std::vector<int> shape, float stddev,
                                     RandomStream& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (float& x : t.v) x = rng.normal(0.0f, stddev);
  return create(name, std::move(t));
}

Parameter& ParamStore::create_zeros(const std::string& name, std::vector<int> shape) {
  return create(name, Tensor::zeros(std::move(shape)));
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : items_[it->second].get();
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : items_[it->second].get();
}

Parameter& ParamStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (!p) throw Error("ParamStore: unknown parameter '" + name + "'");
  return *p;
}

const Parameter& ParamStore::at(const std::string& name) const {
  const Parameter* p = find(name);
  if (!p) throw Error("ParamStore: unknown parameter '" + name + "'");
  return *p;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(items_.size());
  for (auto& p : items_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParamStore::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto& p : items_)
    if (p->name.rfind(prefix, 0) == 0) out.push_back(p.get());
  return out;
}

std::int64_t ParamStore::value_count() const {
  std::int64_t n = 0;
  for (const auto& p : items_) n += p->value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : items_) p->zero_grad();
}

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg, std::int64_t step) {
  if (cfg.lr <= 0.0f) throw Error("adam_step: lr must be positive");
  if (step < 1) throw Error("adam_step: step must be >= 1");
  const double bc1 = 1.0 - std::pow(double(cfg.beta1), double(step));
  const double bc2 = 1.0 - std::pow(double(cfg.beta2), double(step));
  for (Parameter* p : params) {
    const std::size_t n = p->value.v.size();
    for (std::size_t i = 0; i < n; ++i) {
      float g = p->grad.v[i];
      if (!std::isfinite(g))
        throw NumericalError("adam_step: non-finite gradient in parameter '" + p->name +
                             "' at flat index " + std::to_string(i));
      float& m = p->m.v[i];
      float& v = p->v.v[i];
      m = cfg.beta1 * m + (1.0f - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0f - cfg.beta2) * g * g;
      double mhat = m / bc1;
      double vhat = v / bc2;
      p->value.v[i] -= static_cast<float>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

// ---- checkpoint I/O ----

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4b43444eu;  // "NDCK"
constexpr std::uint32_t kTrainStateMagic = 0x5354444eu;  // "NDTS"
constexpr std::uint32_t kFormatVersion = 1;

// This code assumes a little-endian host (checked at startup by the CLI and
// irrelevant for x86 targets); values are written verbatim.

void write_u32(std::ostream& os, std::uint32_t x) { os.write(reinterpret_cast<const char*>(&x), 4); }
void write_u64(std::ostream& os, std::uint64_t x) { os.write(reinterpret_cast<const char*>(&x), 8); }

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t x = 0;
  is.read(reinterpret_cast<char*>(&x), 4);
  return x;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t x = 0;
  is.read(reinterpret_cast<char*>(&x), 8);
  return x;
}

void write_record(std::ostream& os, const std::string& name, const Tensor& t) {
  write_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  std::uint32_t rank = static_cast<std::uint32_t>(t.shape.size());
  write_u32(os, rank);
  for (int e : t.shape) write_u32(os, static_cast<std::uint32_t>(e));
  os.write(reinterpret_cast<const char*>(t.v.data()),
           static_cast<std::streamsize>(t.v.size() * sizeof(float)));
}

std::pair<std::string, Tensor> read_record(std::istream& is, const std::filesystem::path& path) {
  std::uint32_t name_len = read_u32(is);
  if (!is || name_len > 4096) throw DataError("corrupt checkpoint record in " + path.string());
  std::string name(name_len, '\0');
  is.read(name.data(), name_len);
  std::uint32_t rank = read_u32(is);
  if (!is || rank > 8) throw DataError("corrupt checkpoint record in " + path.string());
  std::vector<int> shape(rank);
  for (auto& e : shape) e = static_cast<int>(read_u32(is));
  Tensor t = Tensor::zeros(shape);
  is.read(reinterpret_cast<char*>(t.v.data()), static_cast<std::streamsize>(t.v.size() * sizeof(float)));
  if (!is) throw DataError("truncated checkpoint record in " + path.string());
  return {std::move(name), std::move(t)};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path.string());
  write_u32(os, kCheckpointMagic);
  write_u32(os, kFormatVersion);
  write_u32(os, static_cast<std::uint32_t>(store.size()));
  for (const Parameter* p : const_cast<ParamStore&>(store).all()) write_record(os, p->name, p->value);
  if (!os) throw DataError("checkpoint write failed: " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, ParamStore& store) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path.string());
  if (read_u32(is) != kCheckpointMagic) throw DataError("bad checkpoint magic in " + path.string());
  if (read_u32(is) != kFormatVersion) throw DataError("unsupported checkpoint version in " + path.string());
  std::uint32_t count = read_u32(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, t] = read_record(is, path);
    if (Parameter* p = store.find(name)) {
      if (p->value.shape != t.shape)
        throw DataError("checkpoint shape mismatch for '" + name + "' in " + path.string());
      p->value = std::move(t);
    } else {
      store.create(name, std::move(t));
    }
  }
}

void save_train_state(const std::filesystem::path& path, const ParamStore& store, std::int64_t iter) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open train state for writing: " + path.string());
  write_u32(os, kTrainStateMagic);
  write_u32(os, kFormatVersion);
  write_u64(os, static_cast<std::uint64_t>(iter));
  write_u32(os, static_cast<std::uint32_t>(store.size() * 2));
  for (const Parameter* p : const_cast<ParamStore&>(store).all()) {
    write_record(os, "m." + p->name, p->m);
    write_record(os, "v." + p->name, p->v);
  }
  if (!os) throw DataError("train state write failed: " + path.string());
}

std::int64_t load_train_state(const std::filesystem::path& path, ParamStore& store) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open train state: " + path.string());
  if (read_u32(is) != kTrainStateMagic) throw DataError("bad train state magic in " + path.string());
  if (read_u32(is) != kFormatVersion) throw DataError("unsupported train state version in " + path.string());
  std::int64_t iter = static_cast<std::int64_t>(read_u64(is));
  std::uint32_t count = read_u32(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, t] = read_record(is, path);
    bool is_m = name.rfind("m.", 0) == 0;
    bool is_v = name.rfind("v.", 0) == 0;
    if (!is_m && !is_v) throw DataError("unexpected train state record '" + name + "'");
    Parameter* p = store.find(name.substr(2));
    if (!p) throw DataError("train state references unknown parameter '" + name + "'");
    Tensor& dst = is_m ? p->m : p->v;
    if (dst.shape != t.shape) throw DataError("train state shape mismatch for '" + name + "'");
    dst = std::move(t);
  }
  return iter;
}

}  // namespace nerfdyn

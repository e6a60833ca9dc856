#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nerfdyn/errors.hpp"

namespace nerfdyn {

// Dense real-valued tensor, float32 storage, row-major.
// Rank 0 is a scalar, rank 1 a vector, rank 2 a matrix; higher ranks are
// carried for bookkeeping and flattened to 2D (leading dims x last dim)
// wherever matrix semantics are needed.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> v;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<float> data) : shape(std::move(s)), v(std::move(data)) {
    if (static_cast<std::int64_t>(v.size()) != size_of(shape))
      throw ShapeError("Tensor: value count " + std::to_string(v.size()) +
                       " does not match shape " + shape_str(shape));
  }

  static std::int64_t size_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int e : s) n *= e;
    return n;
  }

  static Tensor zeros(std::vector<int> s) {
    Tensor t;
    t.v.assign(static_cast<std::size_t>(size_of(s)), 0.0f);
    t.shape = std::move(s);
    return t;
  }

  static Tensor full(std::vector<int> s, float value) {
    Tensor t = zeros(std::move(s));
    std::fill(t.v.begin(), t.v.end(), value);
    return t;
  }

  static Tensor scalar(float value) { return Tensor({}, {value}); }

  static Tensor row(std::vector<float> data) {
    int n = static_cast<int>(data.size());
    return Tensor({1, n}, std::move(data));
  }

  std::int64_t size() const { return static_cast<std::int64_t>(v.size()); }

  // 2D view: all leading extents collapse into rows, last extent is cols.
  int rows() const {
    if (shape.empty()) return 1;
    std::int64_t r = 1;
    for (std::size_t i = 0; i + 1 < shape.size(); ++i) r *= shape[i];
    return static_cast<int>(r);
  }
  int cols() const { return shape.empty() ? 1 : shape.back(); }

  float item() const {
    if (v.size() != 1) throw ShapeError("Tensor::item on non-scalar " + shape_str(shape));
    return v[0];
  }

  bool all_finite() const {
    for (float x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  static std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += "x";
      out += std::to_string(s[i]);
    }
    return out + "]";
  }
};

}  // namespace nerfdyn

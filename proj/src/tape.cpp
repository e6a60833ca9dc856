#include "nerfdyn/tape.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>

#include "nerfdyn/params.hpp"

namespace nerfdyn {

namespace {
using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
}  // namespace

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::kConst: return "const";
    case Op::kInput: return "input";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kRelu: return "relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kSquare: return "square";
    case Op::kSqrt: return "sqrt";
    case Op::kMatMul: return "matmul";
    case Op::kAddRowVec: return "add_rowvec";
    case Op::kRepeatRow: return "repeat_row";
    case Op::kConcatCols: return "concat_cols";
    case Op::kConcatRows: return "concat_rows";
    case Op::kSliceCols: return "slice_cols";
    case Op::kReshape: return "reshape";
    case Op::kGather: return "gather";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kRowSum: return "row_sum";
    case Op::kCumsumExRows: return "cumsum_exclusive_rows";
  }
  return "?";
}

void Tape::clear() {
  nodes_.clear();
  arena_.clear();
  grads_.clear();
  param_leaves_.clear();
  backward_done_ = false;
}

static std::string dim_str(int r, int c) {
  return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

void Tape::shape_fail(const char* op, NodeId a, NodeId b) const {
  std::string msg = std::string("tape op '") + op + "': incompatible shapes " +
                    dim_str(nodes_[a].rows, nodes_[a].cols);
  if (b >= 0) msg += " and " + dim_str(nodes_[b].rows, nodes_[b].cols);
  throw ShapeError(msg);
}

void Tape::require_same_or_scalar(const char* op, NodeId a, NodeId b) const {
  const Node &na = nodes_[a], &nb = nodes_[b];
  bool same = na.rows == nb.rows && na.cols == nb.cols;
  bool a_scalar = na.rows == 1 && na.cols == 1;
  bool b_scalar = nb.rows == 1 && nb.cols == 1;
  if (!same && !a_scalar && !b_scalar) shape_fail(op, a, b);
}

void Tape::check_node_finite(NodeId n) const {
  if (!check_finite_) return;
  const Node& nd = nodes_[n];
  const float* p = arena_.data() + nd.off;
  std::int64_t count = std::int64_t(nd.rows) * nd.cols;
  for (std::int64_t i = 0; i < count; ++i) {
    if (!std::isfinite(p[i]))
      throw NumericalError(std::string("tape op '") + op_name(nd.op) + "' produced a non-finite value at flat index " +
                           std::to_string(i) + " of " + dim_str(nd.rows, nd.cols));
  }
}

// Allocates the node and its arena slot; does not execute it.
NodeId Tape::push(Op op, int rows, int cols, NodeId a, NodeId b) {
  if (backward_done_)
    throw Error("tape: cannot extend a tape after backward(); call clear() first");
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.rows = rows;
  n.cols = cols;
  n.requires_grad = (a >= 0 && nodes_[a].requires_grad) || (b >= 0 && nodes_[b].requires_grad);
  if (op == Op::kReshape) {
    n.off = nodes_[a].off;  // view
  } else {
    n.off = arena_.size();
    arena_.resize(arena_.size() + std::size_t(rows) * cols);
  }
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::run(NodeId id) {
  forward_op(id);
  check_node_finite(id);
  return id;
}

NodeId Tape::push_leaf(Op op, std::span<const float> data, int rows, int cols) {
  if (std::int64_t(data.size()) != std::int64_t(rows) * cols)
    throw ShapeError("tape leaf: data size " + std::to_string(data.size()) + " != " + dim_str(rows, cols));
  NodeId id = push(op, rows, cols, -1, -1);
  std::memcpy(val(id), data.data(), data.size() * sizeof(float));
  nodes_[id].requires_grad = (op == Op::kInput);
  check_node_finite(id);
  return id;
}

NodeId Tape::constant(const Tensor& t) { return push_leaf(Op::kConst, t.v, t.rows(), t.cols()); }
NodeId Tape::constant(std::span<const float> data, int rows, int cols) {
  return push_leaf(Op::kConst, data, rows, cols);
}
NodeId Tape::constant_scalar(float x) {
  return push_leaf(Op::kConst, std::span<const float>(&x, 1), 1, 1);
}
NodeId Tape::input(const Tensor& t) { return push_leaf(Op::kInput, t.v, t.rows(), t.cols()); }
NodeId Tape::input(std::span<const float> data, int rows, int cols) {
  return push_leaf(Op::kInput, data, rows, cols);
}

NodeId Tape::param(Parameter& p) {
  NodeId id = push_leaf(Op::kInput, p.value.v, p.value.rows(), p.value.cols());
  param_leaves_.emplace_back(&p, id);
  return id;
}

NodeId Tape::add(NodeId a, NodeId b) {
  require_same_or_scalar("add", a, b);
  const Node &na = nodes_[a], &nb = nodes_[b];
  return run(push(Op::kAdd, std::max(na.rows, nb.rows), std::max(na.cols, nb.cols), a, b));
}
NodeId Tape::sub(NodeId a, NodeId b) {
  require_same_or_scalar("sub", a, b);
  const Node &na = nodes_[a], &nb = nodes_[b];
  return run(push(Op::kSub, std::max(na.rows, nb.rows), std::max(na.cols, nb.cols), a, b));
}
NodeId Tape::mul(NodeId a, NodeId b) {
  require_same_or_scalar("mul", a, b);
  const Node &na = nodes_[a], &nb = nodes_[b];
  return run(push(Op::kMul, std::max(na.rows, nb.rows), std::max(na.cols, nb.cols), a, b));
}
NodeId Tape::div(NodeId a, NodeId b) {
  require_same_or_scalar("div", a, b);
  const Node &na = nodes_[a], &nb = nodes_[b];
  return run(push(Op::kDiv, std::max(na.rows, nb.rows), std::max(na.cols, nb.cols), a, b));
}

NodeId Tape::neg(NodeId a) { return run(push(Op::kNeg, nodes_[a].rows, nodes_[a].cols, a, -1)); }
NodeId Tape::relu(NodeId a) { return run(push(Op::kRelu, nodes_[a].rows, nodes_[a].cols, a, -1)); }
NodeId Tape::sigmoid(NodeId a) { return run(push(Op::kSigmoid, nodes_[a].rows, nodes_[a].cols, a, -1)); }
NodeId Tape::sin_op(NodeId a) { return run(push(Op::kSin, nodes_[a].rows, nodes_[a].cols, a, -1)); }
NodeId Tape::cos_op(NodeId a) { return run(push(Op::kCos, nodes_[a].rows, nodes_[a].cols, a, -1)); }
NodeId Tape::exp_op(NodeId a) { return run(push(Op::kExp, nodes_[a].rows, nodes_[a].cols, a, -1)); }
NodeId Tape::square(NodeId a) { return run(push(Op::kSquare, nodes_[a].rows, nodes_[a].cols, a, -1)); }
NodeId Tape::sqrt_op(NodeId a) { return run(push(Op::kSqrt, nodes_[a].rows, nodes_[a].cols, a, -1)); }

NodeId Tape::matmul(NodeId a, NodeId b) {
  if (nodes_[a].cols != nodes_[b].rows) shape_fail("matmul", a, b);
  return run(push(Op::kMatMul, nodes_[a].rows, nodes_[b].cols, a, b));
}

NodeId Tape::add_rowvec(NodeId a, NodeId b) {
  if (nodes_[b].rows != 1 || nodes_[b].cols != nodes_[a].cols) shape_fail("add_rowvec", a, b);
  return run(push(Op::kAddRowVec, nodes_[a].rows, nodes_[a].cols, a, b));
}

NodeId Tape::repeat_row(NodeId a, int times) {
  if (nodes_[a].rows != 1 || times < 1) shape_fail("repeat_row", a, -1);
  return run(push(Op::kRepeatRow, times, nodes_[a].cols, a, -1));
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
  if (nodes_[a].rows != nodes_[b].rows) shape_fail("concat_cols", a, b);
  return run(push(Op::kConcatCols, nodes_[a].rows, nodes_[a].cols + nodes_[b].cols, a, b));
}

NodeId Tape::concat_rows(NodeId a, NodeId b) {
  if (nodes_[a].cols != nodes_[b].cols) shape_fail("concat_rows", a, b);
  return run(push(Op::kConcatRows, nodes_[a].rows + nodes_[b].rows, nodes_[a].cols, a, b));
}

NodeId Tape::slice_cols(NodeId a, int col0, int ncols) {
  if (col0 < 0 || ncols < 1 || col0 + ncols > nodes_[a].cols) shape_fail("slice_cols", a, -1);
  NodeId id = push(Op::kSliceCols, nodes_[a].rows, ncols, a, -1);
  nodes_[id].aux = col0;
  return run(id);
}

NodeId Tape::reshape(NodeId a, int rows, int cols) {
  if (std::int64_t(rows) * cols != std::int64_t(nodes_[a].rows) * nodes_[a].cols)
    shape_fail("reshape", a, -1);
  return push(Op::kReshape, rows, cols, a, -1);  // view; nothing to execute
}

NodeId Tape::gather(NodeId a, std::shared_ptr<const std::vector<std::int32_t>> idx, int rows, int cols) {
  if (std::int64_t(idx->size()) != std::int64_t(rows) * cols) shape_fail("gather", a, -1);
  NodeId id = push(Op::kGather, rows, cols, a, -1);
  nodes_[id].idx = std::move(idx);
  return run(id);
}

NodeId Tape::sum(NodeId a) { return run(push(Op::kSum, 1, 1, a, -1)); }
NodeId Tape::mean(NodeId a) { return run(push(Op::kMean, 1, 1, a, -1)); }
NodeId Tape::row_sum(NodeId a) { return run(push(Op::kRowSum, nodes_[a].rows, 1, a, -1)); }
NodeId Tape::cumsum_exclusive_rows(NodeId a) {
  return run(push(Op::kCumsumExRows, nodes_[a].rows, nodes_[a].cols, a, -1));
}

std::span<const float> Tape::value(NodeId n) const {
  return {val(n), std::size_t(size(n))};
}

Tensor Tape::value_tensor(NodeId n) const {
  const Node& nd = nodes_[n];
  return Tensor({nd.rows, nd.cols}, std::vector<float>(val(n), val(n) + size(n)));
}

float Tape::scalar_value(NodeId n) const {
  if (size(n) != 1) throw ShapeError("scalar_value on " + dim_str(nodes_[n].rows, nodes_[n].cols));
  return *val(n);
}

void Tape::forward_op(NodeId id) {
  Node& n = nodes_[id];
  float* out = arena_.data() + n.off;
  std::int64_t count = std::int64_t(n.rows) * n.cols;
  const float* pa = n.a >= 0 ? arena_.data() + nodes_[n.a].off : nullptr;
  const float* pb = n.b >= 0 ? arena_.data() + nodes_[n.b].off : nullptr;
  auto a_scalar = [&] { return nodes_[n.a].rows == 1 && nodes_[n.a].cols == 1; };
  auto b_scalar = [&] { return nodes_[n.b].rows == 1 && nodes_[n.b].cols == 1; };

  switch (n.op) {
    case Op::kConst:
    case Op::kInput:
    case Op::kReshape:
      break;
    case Op::kAdd: {
      if (a_scalar() && count > 1) {
        float s = pa[0];
        for (std::int64_t i = 0; i < count; ++i) out[i] = s + pb[i];
      } else if (b_scalar() && count > 1) {
        float s = pb[0];
        for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] + s;
      } else {
        for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] + pb[i];
      }
      break;
    }
    case Op::kSub: {
      if (a_scalar() && count > 1) {
        float s = pa[0];
        for (std::int64_t i = 0; i < count; ++i) out[i] = s - pb[i];
      } else if (b_scalar() && count > 1) {
        float s = pb[0];
        for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] - s;
      } else {
        for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] - pb[i];
      }
      break;
    }
    case Op::kMul: {
      if (a_scalar() && count > 1) {
        float s = pa[0];
        for (std::int64_t i = 0; i < count; ++i) out[i] = s * pb[i];
      } else if (b_scalar() && count > 1) {
        float s = pb[0];
        for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] * s;
      } else {
        for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] * pb[i];
      }
      break;
    }
    case Op::kDiv: {
      if (a_scalar() && count > 1) {
        float s = pa[0];
        for (std::int64_t i = 0; i < count; ++i) out[i] = s / pb[i];
      } else if (b_scalar() && count > 1) {
        float s = pb[0];
        for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] / s;
      } else {
        for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] / pb[i];
      }
      break;
    }
    case Op::kNeg:
      for (std::int64_t i = 0; i < count; ++i) out[i] = -pa[i];
      break;
    case Op::kRelu:
      for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] > 0.0f ? pa[i] : 0.0f;
      break;
    case Op::kSigmoid:
      for (std::int64_t i = 0; i < count; ++i) out[i] = 1.0f / (1.0f + std::exp(-pa[i]));
      break;
    case Op::kSin:
      for (std::int64_t i = 0; i < count; ++i) out[i] = std::sin(pa[i]);
      break;
    case Op::kCos:
      for (std::int64_t i = 0; i < count; ++i) out[i] = std::cos(pa[i]);
      break;
    case Op::kExp:
      for (std::int64_t i = 0; i < count; ++i) out[i] = std::exp(pa[i]);
      break;
    case Op::kSquare:
      for (std::int64_t i = 0; i < count; ++i) out[i] = pa[i] * pa[i];
      break;
    case Op::kSqrt:
      for (std::int64_t i = 0; i < count; ++i) out[i] = std::sqrt(pa[i]);
      break;
    case Op::kMatMul: {
      CMapMat A(pa, nodes_[n.a].rows, nodes_[n.a].cols);
      CMapMat B(pb, nodes_[n.b].rows, nodes_[n.b].cols);
      MapMat C(out, n.rows, n.cols);
      C.noalias() = A * B;
      break;
    }
    case Op::kAddRowVec: {
      int r = n.rows, c = n.cols;
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[std::size_t(i) * c + j] = pa[std::size_t(i) * c + j] + pb[j];
      break;
    }
    case Op::kRepeatRow: {
      int c = n.cols;
      for (int i = 0; i < n.rows; ++i) std::memcpy(out + std::size_t(i) * c, pa, std::size_t(c) * sizeof(float));
      break;
    }
    case Op::kConcatCols: {
      int r = n.rows, ca = nodes_[n.a].cols, cb = nodes_[n.b].cols;
      for (int i = 0; i < r; ++i) {
        std::memcpy(out + std::size_t(i) * (ca + cb), pa + std::size_t(i) * ca, std::size_t(ca) * sizeof(float));
        std::memcpy(out + std::size_t(i) * (ca + cb) + ca, pb + std::size_t(i) * cb, std::size_t(cb) * sizeof(float));
      }
      break;
    }
    case Op::kConcatRows: {
      std::size_t na = std::size_t(nodes_[n.a].rows) * nodes_[n.a].cols;
      std::size_t nb = std::size_t(nodes_[n.b].rows) * nodes_[n.b].cols;
      std::memcpy(out, pa, na * sizeof(float));
      std::memcpy(out + na, pb, nb * sizeof(float));
      break;
    }
    case Op::kSliceCols: {
      int r = n.rows, c = n.cols, c0 = n.aux, ca = nodes_[n.a].cols;
      for (int i = 0; i < r; ++i)
        std::memcpy(out + std::size_t(i) * c, pa + std::size_t(i) * ca + c0, std::size_t(c) * sizeof(float));
      break;
    }
    case Op::kGather: {
      const auto& idx = *n.idx;
      for (std::int64_t i = 0; i < count; ++i) out[i] = idx[i] < 0 ? 0.0f : pa[idx[i]];
      break;
    }
    case Op::kSum: {
      double acc = 0.0;
      std::int64_t na = size(n.a);
      for (std::int64_t i = 0; i < na; ++i) acc += pa[i];
      out[0] = static_cast<float>(acc);
      break;
    }
    case Op::kMean: {
      double acc = 0.0;
      std::int64_t na = size(n.a);
      for (std::int64_t i = 0; i < na; ++i) acc += pa[i];
      out[0] = static_cast<float>(acc / double(na));
      break;
    }
    case Op::kRowSum: {
      int r = nodes_[n.a].rows, c = nodes_[n.a].cols;
      for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        const float* row = pa + std::size_t(i) * c;
        for (int j = 0; j < c; ++j) acc += row[j];
        out[i] = static_cast<float>(acc);
      }
      break;
    }
    case Op::kCumsumExRows: {
      int r = n.rows, c = n.cols;
      for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        const float* row = pa + std::size_t(i) * c;
        float* orow = out + std::size_t(i) * c;
        for (int j = 0; j < c; ++j) {
          orow[j] = static_cast<float>(acc);
          acc += row[j];
        }
      }
      break;
    }
  }
}

void Tape::backward(NodeId scalar_loss) {
  if (size(scalar_loss) != 1)
    throw ShapeError("backward: loss must be scalar, got " +
                     dim_str(nodes_[scalar_loss].rows, nodes_[scalar_loss].cols));
  Seed s{scalar_loss, {1.0f}};
  backward(std::span<const Seed>(&s, 1));
}

void Tape::backward(std::span<const Seed> seeds) {
  if (backward_done_) throw Error("tape: backward() already ran; clear() before building a new graph");
  if (nodes_.empty()) throw Error("tape: backward on empty tape");
  backward_done_ = true;
  grads_.assign(arena_.size(), 0.0f);
  NodeId start = 0;
  for (const Seed& s : seeds) {
    const Node& n = nodes_[s.node];
    float* g = grads_.data() + n.off;
    std::int64_t count = std::int64_t(n.rows) * n.cols;
    if (s.upstream.empty()) {
      for (std::int64_t i = 0; i < count; ++i) g[i] += 1.0f;
    } else {
      if (std::int64_t(s.upstream.size()) != count)
        throw ShapeError("backward: upstream size " + std::to_string(s.upstream.size()) +
                         " != node size " + std::to_string(count));
      for (std::int64_t i = 0; i < count; ++i) g[i] += s.upstream[i];
    }
    start = std::max(start, s.node);
  }
  for (NodeId id = start; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    if (n.op == Op::kConst || n.op == Op::kInput || n.op == Op::kReshape) continue;
    backward_op(id);
  }
}

void Tape::backward_op(NodeId id) {
  const Node& n = nodes_[id];
  const float* g = grads_.data() + n.off;
  const float* out = arena_.data() + n.off;
  std::int64_t count = std::int64_t(n.rows) * n.cols;
  bool need_a = n.a >= 0 && nodes_[n.a].requires_grad;
  bool need_b = n.b >= 0 && nodes_[n.b].requires_grad;
  float* ga = need_a ? grads_.data() + nodes_[n.a].off : nullptr;
  float* gb = need_b ? grads_.data() + nodes_[n.b].off : nullptr;
  const float* pa = n.a >= 0 ? arena_.data() + nodes_[n.a].off : nullptr;
  const float* pb = n.b >= 0 ? arena_.data() + nodes_[n.b].off : nullptr;
  auto a_scalar = [&] { return nodes_[n.a].rows == 1 && nodes_[n.a].cols == 1; };
  auto b_scalar = [&] { return nodes_[n.b].rows == 1 && nodes_[n.b].cols == 1; };

  switch (n.op) {
    case Op::kConst:
    case Op::kInput:
    case Op::kReshape:
      break;
    case Op::kAdd: {
      if (need_a) {
        if (a_scalar() && count > 1) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < count; ++i) acc += g[i];
          ga[0] += static_cast<float>(acc);
        } else {
          for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i];
        }
      }
      if (need_b) {
        if (b_scalar() && count > 1) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < count; ++i) acc += g[i];
          gb[0] += static_cast<float>(acc);
        } else {
          for (std::int64_t i = 0; i < count; ++i) gb[i] += g[i];
        }
      }
      break;
    }
    case Op::kSub: {
      if (need_a) {
        if (a_scalar() && count > 1) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < count; ++i) acc += g[i];
          ga[0] += static_cast<float>(acc);
        } else {
          for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i];
        }
      }
      if (need_b) {
        if (b_scalar() && count > 1) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < count; ++i) acc += g[i];
          gb[0] -= static_cast<float>(acc);
        } else {
          for (std::int64_t i = 0; i < count; ++i) gb[i] -= g[i];
        }
      }
      break;
    }
    case Op::kMul: {
      if (need_a) {
        if (a_scalar() && count > 1) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < count; ++i) acc += double(g[i]) * pb[i];
          ga[0] += static_cast<float>(acc);
        } else if (b_scalar() && count > 1) {
          float s = pb[0];
          for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i] * s;
        } else {
          for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i] * pb[i];
        }
      }
      if (need_b) {
        if (b_scalar() && count > 1) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < count; ++i) acc += double(g[i]) * pa[i];
          gb[0] += static_cast<float>(acc);
        } else if (a_scalar() && count > 1) {
          float s = pa[0];
          for (std::int64_t i = 0; i < count; ++i) gb[i] += g[i] * s;
        } else {
          for (std::int64_t i = 0; i < count; ++i) gb[i] += g[i] * pa[i];
        }
      }
      break;
    }
    case Op::kDiv: {
      if (need_a) {
        if (a_scalar() && count > 1) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < count; ++i) acc += double(g[i]) / pb[i];
          ga[0] += static_cast<float>(acc);
        } else if (b_scalar() && count > 1) {
          float inv = 1.0f / pb[0];
          for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i] * inv;
        } else {
          for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i] / pb[i];
        }
      }
      if (need_b) {
        if (b_scalar() && count > 1) {
          double acc = 0.0;
          float inv = 1.0f / pb[0];
          for (std::int64_t i = 0; i < count; ++i) acc += -double(g[i]) * out[i] * inv;
          gb[0] += static_cast<float>(acc);
        } else if (a_scalar() && count > 1) {
          for (std::int64_t i = 0; i < count; ++i) gb[i] += -g[i] * out[i] / pb[i];
        } else {
          for (std::int64_t i = 0; i < count; ++i) gb[i] += -g[i] * out[i] / pb[i];
        }
      }
      break;
    }
    case Op::kNeg:
      if (need_a)
        for (std::int64_t i = 0; i < count; ++i) ga[i] -= g[i];
      break;
    case Op::kRelu:
      if (need_a)
        for (std::int64_t i = 0; i < count; ++i) ga[i] += pa[i] > 0.0f ? g[i] : 0.0f;
      break;
    case Op::kSigmoid:
      if (need_a)
        for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i] * out[i] * (1.0f - out[i]);
      break;
    case Op::kSin:
      if (need_a)
        for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i] * std::cos(pa[i]);
      break;
    case Op::kCos:
      if (need_a)
        for (std::int64_t i = 0; i < count; ++i) ga[i] -= g[i] * std::sin(pa[i]);
      break;
    case Op::kExp:
      if (need_a)
        for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i] * out[i];
      break;
    case Op::kSquare:
      if (need_a)
        for (std::int64_t i = 0; i < count; ++i) ga[i] += 2.0f * g[i] * pa[i];
      break;
    case Op::kSqrt:
      if (need_a)
        for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i] * 0.5f / out[i];
      break;
    case Op::kMatMul: {
      CMapMat A(pa, nodes_[n.a].rows, nodes_[n.a].cols);
      CMapMat B(pb, nodes_[n.b].rows, nodes_[n.b].cols);
      CMapMat G(g, n.rows, n.cols);
      if (need_a) {
        MapMat GA(ga, nodes_[n.a].rows, nodes_[n.a].cols);
        GA.noalias() += G * B.transpose();
      }
      if (need_b) {
        MapMat GB(gb, nodes_[n.b].rows, nodes_[n.b].cols);
        GB.noalias() += A.transpose() * G;
      }
      break;
    }
    case Op::kAddRowVec: {
      int r = n.rows, c = n.cols;
      if (need_a)
        for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i];
      if (need_b) {
        for (int j = 0; j < c; ++j) {
          double acc = 0.0;
          for (int i = 0; i < r; ++i) acc += g[std::size_t(i) * c + j];
          gb[j] += static_cast<float>(acc);
        }
      }
      break;
    }
    case Op::kRepeatRow: {
      if (need_a) {
        int r = n.rows, c = n.cols;
        for (int j = 0; j < c; ++j) {
          double acc = 0.0;
          for (int i = 0; i < r; ++i) acc += g[std::size_t(i) * c + j];
          ga[j] += static_cast<float>(acc);
        }
      }
      break;
    }
    case Op::kConcatCols: {
      int r = n.rows, ca = nodes_[n.a].cols, cb = nodes_[n.b].cols;
      for (int i = 0; i < r; ++i) {
        const float* grow = g + std::size_t(i) * (ca + cb);
        if (need_a)
          for (int j = 0; j < ca; ++j) ga[std::size_t(i) * ca + j] += grow[j];
        if (need_b)
          for (int j = 0; j < cb; ++j) gb[std::size_t(i) * cb + j] += grow[ca + j];
      }
      break;
    }
    case Op::kConcatRows: {
      std::size_t na = std::size_t(nodes_[n.a].rows) * nodes_[n.a].cols;
      std::size_t nb = std::size_t(nodes_[n.b].rows) * nodes_[n.b].cols;
      if (need_a)
        for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
      if (need_b)
        for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
      break;
    }
    case Op::kSliceCols: {
      if (need_a) {
        int r = n.rows, c = n.cols, c0 = n.aux, ca = nodes_[n.a].cols;
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) ga[std::size_t(i) * ca + c0 + j] += g[std::size_t(i) * c + j];
      }
      break;
    }
    case Op::kGather: {
      if (need_a) {
        const auto& idx = *n.idx;
        for (std::int64_t i = 0; i < count; ++i)
          if (idx[i] >= 0) ga[idx[i]] += g[i];
      }
      break;
    }
    case Op::kSum: {
      if (need_a) {
        std::int64_t na = size(n.a);
        float s = g[0];
        for (std::int64_t i = 0; i < na; ++i) ga[i] += s;
      }
      break;
    }
    case Op::kMean: {
      if (need_a) {
        std::int64_t na = size(n.a);
        float s = g[0] / float(na);
        for (std::int64_t i = 0; i < na; ++i) ga[i] += s;
      }
      break;
    }
    case Op::kRowSum: {
      if (need_a) {
        int r = nodes_[n.a].rows, c = nodes_[n.a].cols;
        for (int i = 0; i < r; ++i) {
          float s = g[i];
          float* row = ga + std::size_t(i) * c;
          for (int j = 0; j < c; ++j) row[j] += s;
        }
      }
      break;
    }
    case Op::kCumsumExRows: {
      if (need_a) {
        int r = n.rows, c = n.cols;
        for (int i = 0; i < r; ++i) {
          double acc = 0.0;
          const float* grow = g + std::size_t(i) * c;
          float* garow = ga + std::size_t(i) * c;
          for (int j = c - 1; j >= 0; --j) {
            garow[j] += static_cast<float>(acc);
            acc += grow[j];
          }
        }
      }
      break;
    }
  }
}

std::span<const float> Tape::grad(NodeId n) const {
  if (!backward_done_) throw Error("tape: grad() queried before backward()");
  return {gr(n), std::size_t(size(n))};
}

void Tape::accumulate_param_grads(float scale) const {
  if (!backward_done_) throw Error("tape: accumulate_param_grads before backward()");
  for (const auto& [p, node] : param_leaves_) {
    const float* g = gr(node);
    std::int64_t count = size(node);
    for (std::int64_t i = 0; i < count; ++i) p->grad.v[i] += scale * g[i];
  }
}

}  // namespace nerfdyn

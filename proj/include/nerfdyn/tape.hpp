#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nerfdyn/tensor.hpp"

namespace nerfdyn {

struct Parameter;

using NodeId = std::int32_t;

// Reverse-mode autodiff over dense float32 tensors.
//
// Nodes live in topological order by construction; values and gradients are
// stored in flat arenas that are reused across clear() calls, so a steady-state
// training iteration performs no allocation. Reductions (sum, mean, row_sum,
// cumulative sums) accumulate in double before rounding back to float32.
//
// A tape is single-threaded. Parallelism happens across tapes over shared
// read-only parameter snapshots; accumulate_param_grads() is the explicit
// reduction step.
class Tape {
 public:
  explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

  // Drops all nodes but keeps arena capacity.
  void clear();

  void set_check_finite(bool on) { check_finite_ = on; }

  // ---- leaves ----
  NodeId constant(const Tensor& t);
  NodeId constant(std::span<const float> data, int rows, int cols);
  NodeId constant_scalar(float x);
  // Watched leaf: gradient is computed and queryable after backward().
  NodeId input(const Tensor& t);
  NodeId input(std::span<const float> data, int rows, int cols);
  // Watched leaf bound to a Parameter (value copied in; grads reduced back
  // via accumulate_param_grads).
  NodeId param(Parameter& p);

  // ---- elementwise; equal shapes, or one side scalar (1x1) ----
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);

  // ---- unary elementwise ----
  NodeId neg(NodeId a);
  NodeId relu(NodeId a);  // max(x, 0)
  NodeId sigmoid(NodeId a);
  NodeId sin_op(NodeId a);
  NodeId cos_op(NodeId a);
  NodeId exp_op(NodeId a);
  NodeId square(NodeId a);
  NodeId sqrt_op(NodeId a);

  // ---- structure ----
  NodeId matmul(NodeId a, NodeId b);                  // [m,k]x[k,n]
  NodeId add_rowvec(NodeId a, NodeId b);              // [r,c] + [1,c]
  NodeId repeat_row(NodeId a, int times);             // [1,c] -> [times,c]
  NodeId concat_cols(NodeId a, NodeId b);             // [r,ca] ++ [r,cb]
  NodeId concat_rows(NodeId a, NodeId b);             // [ra,c] ++ [rb,c]
  NodeId slice_cols(NodeId a, int col0, int ncols);   // [r,c] -> [r,ncols]
  NodeId reshape(NodeId a, int rows, int cols);       // view, no copy
  // out[i] = idx[i] < 0 ? 0 : in.flat[idx[i]]; backward scatter-adds.
  NodeId gather(NodeId a, std::shared_ptr<const std::vector<std::int32_t>> idx, int rows, int cols);

  // ---- reductions ----
  NodeId sum(NodeId a);       // -> [1,1]
  NodeId mean(NodeId a);      // -> [1,1]
  NodeId row_sum(NodeId a);   // [r,c] -> [r,1]
  // out[i,j] = sum_{k<j} in[i,k]
  NodeId cumsum_exclusive_rows(NodeId a);

  // ---- access ----
  int rows(NodeId n) const { return nodes_[n].rows; }
  int cols(NodeId n) const { return nodes_[n].cols; }
  std::int64_t size(NodeId n) const { return std::int64_t(nodes_[n].rows) * nodes_[n].cols; }
  std::span<const float> value(NodeId n) const;
  Tensor value_tensor(NodeId n) const;
  float scalar_value(NodeId n) const;

  // ---- backward ----
  struct Seed {
    NodeId node;
    std::vector<float> upstream;  // empty means all-ones (scalar loss: 1.0)
  };
  // Seeds the given cotangents and performs one reverse sweep. May be called
  // once per forward build; a second call without clear() throws.
  void backward(NodeId scalar_loss);
  void backward(std::span<const Seed> seeds);
  std::span<const float> grad(NodeId n) const;
  // Adds scale * d(loss)/d(param) into Parameter::grad for every param leaf.
  void accumulate_param_grads(float scale = 1.0f) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kConst, kInput,
    kAdd, kSub, kMul, kDiv,
    kNeg, kRelu, kSigmoid, kSin, kCos, kExp, kSquare, kSqrt,
    kMatMul, kAddRowVec, kRepeatRow, kConcatCols, kConcatRows,
    kSliceCols, kReshape, kGather,
    kSum, kMean, kRowSum, kCumsumExRows,
  };
  static const char* op_name(Op op);

  struct Node {
    Op op;
    bool requires_grad;
    NodeId a = -1, b = -1;
    int rows = 0, cols = 0;
    std::size_t off = 0;  // offset into arenas
    int aux = 0;          // slice col0, etc.
    std::shared_ptr<const std::vector<std::int32_t>> idx;  // gather map
  };

  NodeId push(Op op, int rows, int cols, NodeId a, NodeId b);
  NodeId run(NodeId id);
  NodeId push_leaf(Op op, std::span<const float> data, int rows, int cols);
  float* val(NodeId n) { return arena_.data() + nodes_[n].off; }
  const float* val(NodeId n) const { return arena_.data() + nodes_[n].off; }
  float* gr(NodeId n) { return grads_.data() + nodes_[n].off; }
  const float* gr(NodeId n) const { return grads_.data() + nodes_[n].off; }
  void check_node_finite(NodeId n) const;
  void require_same_or_scalar(const char* op, NodeId a, NodeId b) const;
  [[noreturn]] void shape_fail(const char* op, NodeId a, NodeId b) const;
  void forward_op(NodeId n);
  void backward_op(NodeId n);

  std::vector<Node> nodes_;
  std::vector<float> arena_;
  std::vector<float> grads_;
  std::vector<std::pair<Parameter*, NodeId>> param_leaves_;
  bool check_finite_ = true;
  bool backward_done_ = false;
};

}  // namespace nerfdyn

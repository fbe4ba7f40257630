#ifndef PSJNET_NUMKERNEL_TAPE_HPP_
#define PSJNET_NUMKERNEL_TAPE_HPP_

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "psjnet/numkernel/tensor.hpp"

namespace psjnet::nk {

class Tape;

// Handle to a node recorded on a Tape. Only meaningful for the tape that
// produced it.
class Var {
 public:
  Var() = default;
  int id() const { return id_; }
  bool valid() const { return id_ >= 0; }

 private:
  friend class Tape;
  explicit Var(int id) : id_(id) {}
  int id_ = -1;
};

// Define-by-run reverse-mode autodiff record. Nodes are appended in
// evaluation order, so the node list is already topologically sorted.
//
// Shape conventions: a rank-1 tensor on the right of matmul is a column, on
// the left a row; scalars are rank-1 tensors of extent 1.
class Tape {
 public:
  // Accumulates the node's output gradient into its inputs' gradients.
  using BackwardFn = std::function<void(Tape&, int self)>;

  // `params` (optional) backs param(); it must outlive the tape.
  explicit Tape(const ParamStore* params = nullptr) : params_(params) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf referencing a tensor of the bound ParamStore. Repeated calls with
  // the same name return the same node.
  Var param(const std::string& name);
  // Leaf referencing an external tensor registered under `name`.
  Var param(const std::string& name, const Tensor& value);
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value);
  Var zeros(const Shape& shape) { return constant(Tensor(shape)); }

  const Tensor& value(Var v) const { return value(v.id()); }
  const Tensor& value(int id) const;
  // Gradient of the last backward() with respect to `v`; zeros if unreached.
  Tensor grad(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var dot(Var a, Var b) { return matmul(a, b); }
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var add_n(const std::vector<Var>& xs);
  Var scale(Var x, double c);
  // a * x + b, element-wise.
  Var affine(Var x, double a, double b);
  Var sigmoid(Var x);
  Var tanh(Var x);
  // Row-wise for rank-2 inputs.
  Var softmax(Var x);
  Var log_softmax(Var x);
  Var concat(const std::vector<Var>& xs);
  Var stack(const std::vector<Var>& rows);
  Var sum(Var x);
  Var mean(Var x);
  // Rank-1: max of all entries. Rank-2: axis 1 maxes each row, axis 0 each
  // column. Ties resolve to the lowest index.
  Var max_axis(Var x, int axis = 1);
  // Leading-axis slice [begin, begin + count).
  Var slice(Var x, std::size_t begin, std::size_t count);
  Var row(Var x, std::size_t index);
  Var pick(Var x, std::size_t index);
  // out(i, j) = a(i) + b(j).
  Var outer_add(Var a, Var b);

  // Escape hatch for ops outside the built-in set.
  Var custom(std::vector<int> inputs, Tensor value, BackwardFn backward);

  // Reverse sweep from a scalar loss. Returns the gradient of every
  // parameter of the bound store (zeros for those never touched) plus any
  // other named leaves.
  GradMap backward(Var loss);

  // For BackwardFn implementations.
  const Tensor& output_grad(int id) const { return nodes_[id].grad; }
  Tensor& grad_buffer(int id);
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const std::vector<int>& inputs(int id) const { return nodes_[id].inputs; }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    std::vector<int> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::string name;
  };

  Var push(Tensor value, std::vector<int> inputs, BackwardFn backward);
  void check_var(Var v, const char* op) const;

  const ParamStore* params_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> named_;
};

}  // namespace psjnet::nk

#endif  // PSJNET_NUMKERNEL_TAPE_HPP_

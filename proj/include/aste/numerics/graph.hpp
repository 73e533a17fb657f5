#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aste/numerics/rng.hpp"
#include "aste/numerics/tensor.hpp"

namespace aste::num {

// A trainable tensor with a stable name and a gradient slot of the same shape.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;
  // Set when a backward pass reached this parameter since the last zero_grad().
  bool has_grad = false;

  void zero_grad();
};

class Graph;

// Handle to a tensor recorded in a Graph. Cheap to copy; valid while the
// graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Graph& graph() const { return *graph_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, std::uint32_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

// Tape of executed operations. Ops append nodes in execution order and
// backward() walks them once in reverse.
class Graph {
 public:
  // Receives the node's output value and its gradient; accumulates into the
  // inputs via Graph::accumulate.
  using BackwardFn =
      std::function<void(Graph&, const Tensor& out_value, const Tensor& out_grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = delete;
  Graph& operator=(Graph&&) = delete;

  // Leaf that does not need a gradient (embeddings, masks).
  Var constant(Tensor value);
  // Leaf whose gradient is kept and readable through grad().
  Var variable(Tensor value);
  // Leaf bound to a parameter. Binding the same parameter twice returns the
  // same Var. The parameter must outlive the graph.
  Var parameter(Parameter& p);

  // Reverse sweep from a scalar loss. Parameter gradients are added to
  // Parameter::grad. A graph supports a single backward pass.
  void backward(Var loss);
  bool consumed() const { return consumed_; }

  // Gradient of the loss with respect to v; zeros if v was not reached.
  Tensor grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Records an op output. `op` names the op for diagnostics. The value is
  // rounded to the current precision and checked for non-finite entries.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

  // Adds `g` into the gradient slot of v (no-op if v needs no gradient).
  void accumulate(Var v, const Tensor& g);
  // Direct access to v's gradient slot for ops that scatter into it. Returns
  // nullptr if v needs no gradient.
  Tensor* grad_slot(Var v);

 private:
  friend class Var;

  struct Node {
    Tensor value;
    const Tensor* external = nullptr;  // parameter storage
    Parameter* param = nullptr;
    Tensor grad;
    bool has_grad_slot = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  const Tensor& node_value(std::uint32_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  void check_owner(Var v) const;

  std::deque<Node> nodes_;  // deque: references stay valid as the tape grows
  std::unordered_map<const Parameter*, std::uint32_t> bound_;
  bool consumed_ = false;
};

// ---- operations ---------------------------------------------------------
// All ops require inputs from the same graph. Shapes are explicit: the only
// broadcasting forms are scalar scaling and the named row-bias op.

// [m x k] * [k x n] -> [m x n]. Rank-1 operands are treated as one row.
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// alpha * x + beta, elementwise.
Var affine(Var x, double alpha, double beta = 0.0);
inline Var scale(Var x, double alpha) { return affine(x, alpha, 0.0); }
inline Var one_minus(Var x) { return affine(x, -1.0, 1.0); }
// m[r, c] + bias[c] for every row r.
Var add_row_bias(Var m, Var bias);

Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);

// Numerically stable softmax along `axis`.
Var softmax(Var x, std::size_t axis);

Var concat(std::span<const Var> parts, std::size_t axis);
inline Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}
// Elements [begin, end) along axis.
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var x, Shape shape);

// Rows of a matrix selected by index; index -1 yields a zero row.
Var gather_rows(Var m, std::span<const std::int64_t> rows);

// Sum of all elements, as a one-element tensor.
Var sum(Var x);

// Sum over rows r with mask[r] != 0 of -log softmax(logits[r])[gold[r]].
// logits is [R x C]; an empty mask means every row counts.
Var cross_entropy(Var logits, std::span<const int> gold, std::span<const std::uint8_t> mask = {});

// Inverted dropout. Identity (same Var) when !training or p == 0.
Var dropout(Var x, double p, bool training, Rng& rng);

}  // namespace aste::num

#include "aste/numerics/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "aste/errors.hpp"

namespace aste::num {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

void require_same_shape(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

Graph& common_graph(std::initializer_list<Var> vars) {
  Graph* g = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw UsageError("operation on an unbound Var");
    if (g && &v.graph() != g) throw UsageError("operands belong to different graphs");
    g = &v.graph();
  }
  return *g;
}

// Splits `shape` around `axis` into (outer, extent, inner) for strided loops.
struct AxisView {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(shape));
  }
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

template <typename F>
Var unary(std::string_view op, Var x, F forward_fn,
          std::function<double(double in, double out)> derivative) {
  Graph& g = common_graph({x});
  Tensor out = x.value();
  for (double& v : out.values()) v = forward_fn(v);
  const Var inputs[] = {x};
  return g.record(op, std::move(out), inputs,
                  [x, derivative](Graph& graph, const Tensor& value, const Tensor& grad) {
                    Tensor* slot = graph.grad_slot(x);
                    if (!slot) return;
                    const Tensor& in = x.value();
                    for (std::size_t i = 0; i < grad.size(); ++i) {
                      (*slot)[i] += grad[i] * derivative(in[i], value[i]);
                    }
                  });
}

}  // namespace

// ---- Parameter / Var / Graph ----------------------------------------------

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  grad.fill(0.0);
  has_grad = false;
}

const Tensor& Var::value() const {
  if (!graph_) throw UsageError("value() of an unbound Var");
  return graph_->node_value(id_);
}

void Graph::check_owner(Var v) const {
  if (!v.valid() || &v.graph() != this || v.id() >= nodes_.size()) {
    throw UsageError("Var does not belong to this graph");
  }
}

Var Graph::constant(Tensor value) {
  value.check_finite("constant");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::variable(Tensor value) {
  Var v = constant(std::move(value));
  nodes_.back().requires_grad = true;
  return v;
}

Var Graph::parameter(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  p.value.check_finite("parameter " + p.name);
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  bound_.emplace(&p, id);
  return Var(this, id);
}

Var Graph::record(std::string_view op, Tensor value, std::span<const Var> inputs,
                  BackwardFn backward) {
  if (consumed_) throw UsageError("cannot record into a graph after backward()");
  round_to_precision(value.values());
  value.check_finite(op);
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    check_owner(in);
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor* Graph::grad_slot(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad_slot) {
    n.grad = Tensor(node_value(v.id()).shape());
    n.has_grad_slot = true;
  }
  return &n.grad;
}

void Graph::accumulate(Var v, const Tensor& g) {
  Tensor* slot = grad_slot(v);
  if (!slot) return;
  if (slot->size() != g.size()) {
    throw InternalError("gradient shape " + shape_string(g.shape()) + " does not match " +
                        shape_string(slot->shape()));
  }
  for (std::size_t i = 0; i < g.size(); ++i) (*slot)[i] += g[i];
}

void Graph::backward(Var loss) {
  check_owner(loss);
  if (consumed_) throw UsageError("backward() called on a consumed graph");
  if (loss.value().size() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  consumed_ = true;
  Tensor* seed = grad_slot(loss);
  if (!seed) return;
  (*seed)[0] = 1.0;
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad_slot) continue;
    if (n.backward) n.backward(*this, node_value(static_cast<std::uint32_t>(i)), n.grad);
  }
  for (Node& n : nodes_) {
    if (!n.param || !n.has_grad_slot) continue;
    Parameter& p = *n.param;
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    for (std::size_t k = 0; k < n.grad.size(); ++k) p.grad[k] += n.grad[k];
    p.has_grad = true;
  }
}

Tensor Graph::grad(Var v) const {
  check_owner(v);
  const Node& n = nodes_[v.id()];
  if (n.has_grad_slot) return n.grad;
  return Tensor(node_value(v.id()).shape());
}

// ---- ops ------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Graph& g = common_graph({a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() > 2 || bv.rank() > 2 || av.cols() != bv.rows()) {
    throw DimensionError("matmul: shape mismatch " + shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));
  }
  // Fixed accumulation order per output element (k ascending), so a row's
  // result does not depend on how many rows are multiplied together.
  const std::size_t m = av.rows(), inner = av.cols(), n = bv.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* dst = out.data() + i * n;
    const double* arow = av.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double scale = arow[k];
      const double* brow = bv.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += scale * brow[j];
    }
  }
  const Var inputs[] = {a, b};
  return g.record("matmul", std::move(out), inputs,
                  [a, b](Graph& graph, const Tensor&, const Tensor& grad) {
                    const Tensor& av = a.value();
                    const Tensor& bv = b.value();
                    if (Tensor* ga = graph.grad_slot(a)) {
                      MutMap(ga->data(), static_cast<Eigen::Index>(av.rows()),
                             static_cast<Eigen::Index>(av.cols()))
                          .noalias() += as_matrix(grad) * as_matrix(bv).transpose();
                    }
                    if (Tensor* gb = graph.grad_slot(b)) {
                      MutMap(gb->data(), static_cast<Eigen::Index>(bv.rows()),
                             static_cast<Eigen::Index>(bv.cols()))
                          .noalias() += as_matrix(av).transpose() * as_matrix(grad);
                    }
                  });
}

Var add(Var a, Var b) {
  Graph& g = common_graph({a, b});
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const Var inputs[] = {a, b};
  return g.record("add", std::move(out), inputs,
                  [a, b](Graph& graph, const Tensor&, const Tensor& grad) {
                    graph.accumulate(a, grad);
                    graph.accumulate(b, grad);
                  });
}

Var sub(Var a, Var b) {
  Graph& g = common_graph({a, b});
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const Var inputs[] = {a, b};
  return g.record("sub", std::move(out), inputs,
                  [a, b](Graph& graph, const Tensor&, const Tensor& grad) {
                    graph.accumulate(a, grad);
                    if (Tensor* gb = graph.grad_slot(b)) {
                      for (std::size_t i = 0; i < grad.size(); ++i) (*gb)[i] -= grad[i];
                    }
                  });
}

Var mul(Var a, Var b) {
  Graph& g = common_graph({a, b});
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const Var inputs[] = {a, b};
  return g.record("mul", std::move(out), inputs,
                  [a, b](Graph& graph, const Tensor&, const Tensor& grad) {
                    if (Tensor* ga = graph.grad_slot(a)) {
                      const Tensor& bv = b.value();
                      for (std::size_t i = 0; i < grad.size(); ++i) (*ga)[i] += grad[i] * bv[i];
                    }
                    if (Tensor* gb = graph.grad_slot(b)) {
                      const Tensor& av = a.value();
                      for (std::size_t i = 0; i < grad.size(); ++i) (*gb)[i] += grad[i] * av[i];
                    }
                  });
}

Var affine(Var x, double alpha, double beta) {
  Graph& g = common_graph({x});
  Tensor out = x.value();
  for (double& v : out.values()) v = alpha * v + beta;
  const Var inputs[] = {x};
  return g.record("affine", std::move(out), inputs,
                  [x, alpha](Graph& graph, const Tensor&, const Tensor& grad) {
                    if (Tensor* gx = graph.grad_slot(x)) {
                      for (std::size_t i = 0; i < grad.size(); ++i) (*gx)[i] += alpha * grad[i];
                    }
                  });
}

Var add_row_bias(Var m, Var bias) {
  Graph& g = common_graph({m, bias});
  const Tensor& mv = m.value();
  const Tensor& bv = bias.value();
  if (mv.rank() > 2 || bv.size() != mv.cols()) {
    throw DimensionError("add_row_bias: shape mismatch " + shape_string(mv.shape()) + " + " +
                         shape_string(bv.shape()));
  }
  Tensor out = mv;
  const std::size_t cols = mv.cols();
  for (std::size_t r = 0; r < mv.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  }
  const Var inputs[] = {m, bias};
  return g.record("add_row_bias", std::move(out), inputs,
                  [m, bias, cols](Graph& graph, const Tensor&, const Tensor& grad) {
                    graph.accumulate(m, grad);
                    if (Tensor* gb = graph.grad_slot(bias)) {
                      const std::size_t rows = grad.size() / cols;
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t c = 0; c < cols; ++c) (*gb)[c] += grad[r * cols + c];
                      }
                    }
                  });
}

Var sigmoid(Var x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        // Branches keep exp() from overflowing for large |v|.
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var softmax(Var x, std::size_t axis) {
  Graph& g = common_graph({x});
  const Tensor& xv = x.value();
  const AxisView v = axis_view(xv.shape(), axis);
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.extent * v.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < v.extent; ++k) mx = std::max(mx, xv[base + k * v.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < v.extent; ++k) {
        const double e = std::exp(xv[base + k * v.inner] - mx);
        out[base + k * v.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < v.extent; ++k) out[base + k * v.inner] /= total;
    }
  }
  const Var inputs[] = {x};
  return g.record("softmax", std::move(out), inputs,
                  [x, v](Graph& graph, const Tensor& y, const Tensor& grad) {
                    Tensor* gx = graph.grad_slot(x);
                    if (!gx) return;
                    for (std::size_t o = 0; o < v.outer; ++o) {
                      for (std::size_t i = 0; i < v.inner; ++i) {
                        const std::size_t base = o * v.extent * v.inner + i;
                        double dot = 0.0;
                        for (std::size_t k = 0; k < v.extent; ++k) {
                          dot += grad[base + k * v.inner] * y[base + k * v.inner];
                        }
                        for (std::size_t k = 0; k < v.extent; ++k) {
                          const std::size_t idx = base + k * v.inner;
                          (*gx)[idx] += y[idx] * (grad[idx] - dot);
                        }
                      }
                    }
                  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw UsageError("concat of zero tensors");
  Graph& g = parts[0].graph();
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> extents;
  for (const Var& p : parts) {
    common_graph({parts[0], p});
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw DimensionError("concat: extent mismatch " + shape_string(first) + " vs " +
                           shape_string(s) + " along axis " + std::to_string(axis));
    }
    extents.push_back(s[axis]);
    out_shape[axis] += s[axis];
  }
  const AxisView ov = axis_view(out_shape, axis);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& pv = parts[p].value();
    const std::size_t block = extents[p] * ov.inner;
    for (std::size_t o = 0; o < ov.outer; ++o) {
      std::copy_n(pv.data() + o * block, block,
                  out.data() + o * ov.extent * ov.inner + offset * ov.inner);
    }
    offset += extents[p];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record("concat", std::move(out), inputs,
                  [inputs, extents, ov](Graph& graph, const Tensor&, const Tensor& grad) {
                    std::size_t offset = 0;
                    for (std::size_t p = 0; p < inputs.size(); ++p) {
                      const std::size_t block = extents[p] * ov.inner;
                      if (Tensor* gp = graph.grad_slot(inputs[p])) {
                        for (std::size_t o = 0; o < ov.outer; ++o) {
                          const double* src = grad.data() + o * ov.extent * ov.inner +
                                              offset * ov.inner;
                          double* dst = gp->data() + o * block;
                          for (std::size_t k = 0; k < block; ++k) dst[k] += src[k];
                        }
                      }
                      offset += extents[p];
                    }
                  });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph& g = common_graph({x});
  const Tensor& xv = x.value();
  const AxisView v = axis_view(xv.shape(), axis);
  if (begin > end || end > v.extent) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for shape " + shape_string(xv.shape()));
  }
  Shape out_shape = xv.shape();
  out_shape[axis] = end - begin;
  Tensor out(out_shape);
  const std::size_t block = (end - begin) * v.inner;
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(xv.data() + o * v.extent * v.inner + begin * v.inner, block,
                out.data() + o * block);
  }
  const Var inputs[] = {x};
  return g.record("slice", std::move(out), inputs,
                  [x, v, begin, block](Graph& graph, const Tensor&, const Tensor& grad) {
                    Tensor* gx = graph.grad_slot(x);
                    if (!gx) return;
                    for (std::size_t o = 0; o < v.outer; ++o) {
                      double* dst = gx->data() + o * v.extent * v.inner + begin * v.inner;
                      const double* src = grad.data() + o * block;
                      for (std::size_t k = 0; k < block; ++k) dst[k] += src[k];
                    }
                  });
}

Var reshape(Var x, Shape shape) {
  Graph& g = common_graph({x});
  Tensor out = x.value().reshaped(std::move(shape));
  const Var inputs[] = {x};
  return g.record("reshape", std::move(out), inputs,
                  [x](Graph& graph, const Tensor&, const Tensor& grad) {
                    if (Tensor* gx = graph.grad_slot(x)) {
                      for (std::size_t i = 0; i < grad.size(); ++i) (*gx)[i] += grad[i];
                    }
                  });
}

Var gather_rows(Var m, std::span<const std::int64_t> rows) {
  Graph& g = common_graph({m});
  const Tensor& mv = m.value();
  if (mv.rank() != 2) {
    throw DimensionError("gather_rows needs a matrix, got " + shape_string(mv.shape()));
  }
  const std::size_t cols = mv.cols();
  const auto n_rows = static_cast<std::int64_t>(mv.rows());
  Tensor out({rows.size(), cols});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::int64_t src = rows[r];
    if (src < -1 || src >= n_rows) {
      throw DimensionError("gather_rows: row " + std::to_string(src) + " out of range for " +
                           shape_string(mv.shape()));
    }
    if (src >= 0) {
      std::copy_n(mv.data() + static_cast<std::size_t>(src) * cols, cols, out.data() + r * cols);
    }
  }
  const Var inputs[] = {m};
  std::vector<std::int64_t> index(rows.begin(), rows.end());
  return g.record("gather_rows", std::move(out), inputs,
                  [m, index = std::move(index), cols](Graph& graph, const Tensor&,
                                                      const Tensor& grad) {
                    Tensor* gm = graph.grad_slot(m);
                    if (!gm) return;
                    for (std::size_t r = 0; r < index.size(); ++r) {
                      if (index[r] < 0) continue;
                      double* dst = gm->data() + static_cast<std::size_t>(index[r]) * cols;
                      const double* src = grad.data() + r * cols;
                      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                    }
                  });
}

Var sum(Var x) {
  Graph& g = common_graph({x});
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const Var inputs[] = {x};
  return g.record("sum", Tensor::scalar(total), inputs,
                  [x](Graph& graph, const Tensor&, const Tensor& grad) {
                    if (Tensor* gx = graph.grad_slot(x)) {
                      for (double& v : gx->values()) v += grad[0];
                    }
                  });
}

Var cross_entropy(Var logits, std::span<const int> gold, std::span<const std::uint8_t> mask) {
  Graph& g = common_graph({logits});
  const Tensor& lv = logits.value();
  if (lv.rank() != 2 || gold.size() != lv.rows() || (!mask.empty() && mask.size() != lv.rows())) {
    throw DimensionError("cross_entropy: logits " + shape_string(lv.shape()) + " with " +
                         std::to_string(gold.size()) + " labels and " +
                         std::to_string(mask.size()) + " mask entries");
  }
  const std::size_t rows = lv.rows();
  const std::size_t classes = lv.cols();
  // Softmax rows are kept for the backward pass.
  Tensor probs({rows, classes});
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask.empty() && !mask[r]) continue;
    if (gold[r] < 0 || static_cast<std::size_t>(gold[r]) >= classes) {
      throw DataError("cross_entropy: label " + std::to_string(gold[r]) + " out of range [0, " +
                      std::to_string(classes) + ") at row " + std::to_string(r));
    }
    const double* row = lv.data() + r * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    const double log_z = mx + std::log(z);
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] = std::exp(row[c] - log_z);
    total += log_z - row[gold[r]];
  }
  const Var inputs[] = {logits};
  std::vector<int> labels(gold.begin(), gold.end());
  std::vector<std::uint8_t> keep(mask.begin(), mask.end());
  return g.record(
      "cross_entropy", Tensor::scalar(total), inputs,
      [logits, probs = std::move(probs), labels = std::move(labels), keep = std::move(keep)](
          Graph& graph, const Tensor&, const Tensor& grad) {
        Tensor* gl = graph.grad_slot(logits);
        if (!gl) return;
        const std::size_t classes = probs.cols();
        for (std::size_t r = 0; r < labels.size(); ++r) {
          if (!keep.empty() && !keep[r]) continue;
          for (std::size_t c = 0; c < classes; ++c) {
            const double onehot = static_cast<int>(c) == labels[r] ? 1.0 : 0.0;
            (*gl)[r * classes + c] += grad[0] * (probs[r * classes + c] - onehot);
          }
        }
      });
}

Var dropout(Var x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw UsageError("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return x;
  Graph& g = common_graph({x});
  const Tensor& xv = x.value();
  Tensor mask(xv.shape());
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& m : mask.values()) m = rng.uniform() < p ? 0.0 : keep_scale;
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const Var inputs[] = {x};
  return g.record("dropout", std::move(out), inputs,
                  [x, mask = std::move(mask)](Graph& graph, const Tensor&, const Tensor& grad) {
                    if (Tensor* gx = graph.grad_slot(x)) {
                      for (std::size_t i = 0; i < grad.size(); ++i) (*gx)[i] += grad[i] * mask[i];
                    }
                  });
}

}  // namespace aste::num

#include "aste/cells/cells.hpp"

#include "aste/errors.hpp"

namespace aste::cells {

namespace {

Var affine_rows(Var in, Parameter* w, Parameter* b) {
  num::Graph& g = in.graph();
  return num::add_row_bias(num::matmul(in, g.parameter(*w)), g.parameter(*b));
}

void require_width(const char* what, Var v, std::size_t rows, std::size_t d) {
  const num::Shape& s = v.shape();
  if (s.size() != 2 || s[0] != rows || s[1] != d) {
    throw DimensionError(std::string(what) + ": expected [" + std::to_string(rows) + "x" +
                         std::to_string(d) + "], got " + num::shape_string(s));
  }
}

}  // namespace

GruParams GruParams::create(num::ParameterStore& store, const std::string& prefix,
                            std::size_t d, num::Rng& rng) {
  GruParams p;
  p.w_r = &store.weight(prefix + ".W_r", {2 * d, d}, rng);
  p.b_r = &store.bias(prefix + ".b_r", {d});
  p.w_z = &store.weight(prefix + ".W_z", {2 * d, d}, rng);
  p.b_z = &store.bias(prefix + ".b_z", {d});
  p.w_x = &store.weight(prefix + ".W_x", {d, d}, rng);
  p.w_h = &store.weight(prefix + ".W_h", {d, d}, rng);
  p.b_h = &store.bias(prefix + ".b_h", {d});
  return p;
}

MdgruParams MdgruParams::create(num::ParameterStore& store, const std::string& prefix,
                                std::size_t d, num::Rng& rng) {
  MdgruParams p;
  p.w_r = &store.weight(prefix + ".W_r", {4 * d, d}, rng);
  p.b_r = &store.bias(prefix + ".b_r", {d});
  p.w_z = &store.weight(prefix + ".W_z", {4 * d, d}, rng);
  p.b_z = &store.bias(prefix + ".b_z", {d});
  p.w_x = &store.weight(prefix + ".W_x", {d, d}, rng);
  p.w_p = &store.weight(prefix + ".W_p", {3 * d, d}, rng);
  p.b_h = &store.bias(prefix + ".b_h", {d});
  for (std::size_t m = 0; m < 3; ++m) {
    p.w_gate[m] = &store.weight(prefix + ".W_lambda" + std::to_string(m + 1), {4 * d, d}, rng);
    p.b_gate[m] = &store.bias(prefix + ".b_lambda" + std::to_string(m + 1), {d});
  }
  return p;
}

Var gru_step(const GruParams& p, Var x, Var h) {
  const std::size_t d = p.hidden_size();
  const std::size_t rows = x.shape().empty() ? 0 : x.shape()[0];
  require_width("gru_step x", x, rows, d);
  require_width("gru_step h", h, rows, d);
  num::Graph& g = x.graph();
  const Var xh = num::concat({x, h}, 1);
  const Var r = num::sigmoid(affine_rows(xh, p.w_r, p.b_r));
  const Var z = num::sigmoid(affine_rows(xh, p.w_z, p.b_z));
  const Var recurrent = num::mul(r, num::matmul(h, g.parameter(*p.w_h)));
  const Var cand = num::tanh(num::add_row_bias(
      num::add(num::matmul(x, g.parameter(*p.w_x)), recurrent), g.parameter(*p.b_h)));
  return num::add(num::mul(z, cand), num::mul(num::one_minus(z), h));
}

MdgruTrace mdgru_step_traced(const MdgruParams& p, Var x, Var h1, Var h2, Var h3) {
  const std::size_t d = p.hidden_size();
  const std::size_t rows = x.shape().empty() ? 0 : x.shape()[0];
  require_width("mdgru_step x", x, rows, d);
  require_width("mdgru_step h1", h1, rows, d);
  require_width("mdgru_step h2", h2, rows, d);
  require_width("mdgru_step h3", h3, rows, d);
  num::Graph& g = x.graph();

  MdgruTrace t;
  const Var h_prev = num::concat({h1, h2, h3}, 1);
  const Var xh = num::concat({x, h_prev}, 1);
  t.reset = num::sigmoid(affine_rows(xh, p.w_r, p.b_r));
  t.update = num::sigmoid(affine_rows(xh, p.w_z, p.b_z));
  const Var recurrent = num::mul(t.reset, num::matmul(h_prev, g.parameter(*p.w_p)));
  t.candidate = num::tanh(num::add_row_bias(
      num::add(num::matmul(x, g.parameter(*p.w_x)), recurrent), g.parameter(*p.b_h)));

  // Gate logits stacked as [R x 3 x d]; softmax across the middle axis.
  std::array<Var, 3> logits;
  for (std::size_t m = 0; m < 3; ++m) {
    logits[m] = num::reshape(affine_rows(xh, p.w_gate[m], p.b_gate[m]), {rows, 1, d});
  }
  const Var gates = num::softmax(num::concat({logits[0], logits[1], logits[2]}, 1), 1);
  const std::array<Var, 3> hs = {h1, h2, h3};
  Var merged;
  for (std::size_t m = 0; m < 3; ++m) {
    t.gates[m] = num::reshape(num::slice(gates, 1, m, m + 1), {rows, d});
    const Var term = num::mul(t.gates[m], hs[m]);
    merged = m == 0 ? term : num::add(merged, term);
  }
  t.merged_prev = merged;
  t.output = num::add(num::mul(t.update, t.candidate),
                      num::mul(num::one_minus(t.update), t.merged_prev));
  return t;
}

Var gru_sequence(const GruParams& p, Var inputs) {
  const std::size_t d = p.hidden_size();
  if (inputs.shape().size() != 2 || inputs.shape()[1] != d) {
    throw DimensionError("gru_sequence: expected [N x " + std::to_string(d) + "], got " +
                         num::shape_string(inputs.shape()));
  }
  const std::size_t n = inputs.shape()[0];
  num::Graph& g = inputs.graph();
  Var h = g.constant(num::Tensor({1, d}));
  std::vector<Var> states;
  states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    h = gru_step(p, num::slice(inputs, 0, i, i + 1), h);
    states.push_back(h);
  }
  return num::concat(states, 0);
}

}  // namespace aste::cells

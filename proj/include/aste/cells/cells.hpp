#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "aste/numerics/graph.hpp"
#include "aste/numerics/parameters.hpp"

namespace aste::cells {

using num::Parameter;
using num::Var;

// Standard GRU with input and hidden width d_h:
//   r  = sigmoid([x; h] W_r + b_r)
//   z  = sigmoid([x; h] W_z + b_z)
//   h~ = tanh(x W_x + r * (h W_h) + b_h)
//   h' = z * h~ + (1 - z) * h
// The interpolation uses the same z convention as the MDGRU output.
struct GruParams {
  Parameter* w_r = nullptr;  // [2d x d]
  Parameter* b_r = nullptr;  // [d]
  Parameter* w_z = nullptr;  // [2d x d]
  Parameter* b_z = nullptr;  // [d]
  Parameter* w_x = nullptr;  // [d x d]
  Parameter* w_h = nullptr;  // [d x d]
  Parameter* b_h = nullptr;  // [d]

  static GruParams create(num::ParameterStore& store, const std::string& prefix, std::size_t d_h,
                          num::Rng& rng);
  std::size_t hidden_size() const { return b_r->value.size(); }
};

// Multi-dimension GRU: one input and three predecessor states.
//   h_prev = [h1; h2; h3]
//   r  = sigmoid([x; h_prev] W_r + b_r)            W_r, W_z: [4d x d]
//   z  = sigmoid([x; h_prev] W_z + b_z)
//   h~ = tanh(x W_x + r * (h_prev W_p) + b_h)      W_x: [d x d], W_p: [3d x d]
//   lambda_1..3 = softmax over the three of [x; h_prev] W_m + b_m (elementwise)
//   h~_prev = sum_i lambda_i * h_i
//   h  = z * h~ + (1 - z) * h~_prev
struct MdgruParams {
  Parameter* w_r = nullptr;
  Parameter* b_r = nullptr;
  Parameter* w_z = nullptr;
  Parameter* b_z = nullptr;
  Parameter* w_x = nullptr;
  Parameter* w_p = nullptr;
  Parameter* b_h = nullptr;
  std::array<Parameter*, 3> w_gate{};  // [4d x d] each
  std::array<Parameter*, 3> b_gate{};  // [d] each

  static MdgruParams create(num::ParameterStore& store, const std::string& prefix,
                            std::size_t d_h, num::Rng& rng);
  std::size_t hidden_size() const { return b_r->value.size(); }
};

// Inputs are [R x d] (R independent rows, R = 1 for a single step); so is the
// result.
Var gru_step(const GruParams& p, Var x, Var h);

// Intermediate values of one MDGRU step, for inspection and tests.
struct MdgruTrace {
  Var output;
  Var reset;
  Var update;
  Var candidate;
  std::array<Var, 3> gates;  // lambda_1..3
  Var merged_prev;           // h~_prev
};

MdgruTrace mdgru_step_traced(const MdgruParams& p, Var x, Var h1, Var h2, Var h3);
inline Var mdgru_step(const MdgruParams& p, Var x, Var h1, Var h2, Var h3) {
  return mdgru_step_traced(p, x, h1, h2, h3).output;
}

// Runs the GRU left to right over the rows of `inputs` ([N x d]) from a zero
// initial state; returns the [N x d] hidden states.
Var gru_sequence(const GruParams& p, Var inputs);

}  // namespace aste::cells

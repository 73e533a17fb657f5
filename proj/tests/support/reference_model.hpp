#pragma once

// Straight-loop reimplementation of the network's forward pass on plain
// doubles. It reads weights by name and shares no code with the model apart
// from the parameter store, so agreement is meaningful.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "aste/numerics/parameters.hpp"

namespace aste::testing {

using Mat = std::vector<std::vector<double>>;

struct RefConfig {
  std::size_t layers;
  std::size_t heads;
  bool use_tga = true;
  bool use_sfi = true;
};

struct RefOutput {
  Mat seq_logits;  // N x 5
  Mat table;       // N*N x 4, row m*N+n
};

class ReferenceModel {
 public:
  ReferenceModel(const num::ParameterStore& store, RefConfig cfg) : store_(store), cfg_(cfg) {}

  const num::Tensor& p(const std::string& name) const {
    const num::Parameter* found = store_.find(name);
    if (!found) throw std::runtime_error("reference: missing parameter " + name);
    return found->value;
  }

  // y = x W + b for a single row.
  std::vector<double> affine(const std::vector<double>& x, const std::string& w,
                             const std::string& b = "") const {
    const num::Tensor& W = p(w);
    std::vector<double> y(W.dim(1), 0.0);
    for (std::size_t j = 0; j < y.size(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * W.at(i, j);
      y[j] = acc + (b.empty() ? 0.0 : p(b)[j]);
    }
    return y;
  }

  static std::vector<double> cat(std::initializer_list<std::vector<double>> parts) {
    std::vector<double> out;
    for (const auto& v : parts) out.insert(out.end(), v.begin(), v.end());
    return out;
  }
  static double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }
  static double relu(double v) { return v > 0 ? v : 0.0; }

  std::vector<double> gru(const std::string& pre, const std::vector<double>& x,
                          const std::vector<double>& h) const {
    const auto xh = cat({x, h});
    const auto r = affine(xh, pre + ".W_r", pre + ".b_r");
    const auto z = affine(xh, pre + ".W_z", pre + ".b_z");
    const auto ax = affine(x, pre + ".W_x");
    const auto ah = affine(h, pre + ".W_h");
    std::vector<double> out(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double cand = std::tanh(ax[k] + sig(r[k]) * ah[k] + p(pre + ".b_h")[k]);
      out[k] = sig(z[k]) * cand + (1 - sig(z[k])) * h[k];
    }
    return out;
  }

  std::vector<double> mdgru(const std::string& pre, const std::vector<double>& x,
                            const std::vector<double>& h1, const std::vector<double>& h2,
                            const std::vector<double>& h3) const {
    const auto hp = cat({h1, h2, h3});
    const auto xh = cat({x, hp});
    const auto r = affine(xh, pre + ".W_r", pre + ".b_r");
    const auto z = affine(xh, pre + ".W_z", pre + ".b_z");
    const auto ax = affine(x, pre + ".W_x");
    const auto ap = affine(hp, pre + ".W_p");
    const auto l1 = affine(xh, pre + ".W_lambda1", pre + ".b_lambda1");
    const auto l2 = affine(xh, pre + ".W_lambda2", pre + ".b_lambda2");
    const auto l3 = affine(xh, pre + ".W_lambda3", pre + ".b_lambda3");
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double cand = std::tanh(ax[k] + sig(r[k]) * ap[k] + p(pre + ".b_h")[k]);
      const double e1 = std::exp(l1[k]), e2 = std::exp(l2[k]), e3 = std::exp(l3[k]);
      const double merged = (e1 * h1[k] + e2 * h2[k] + e3 * h3[k]) / (e1 + e2 + e3);
      out[k] = sig(z[k]) * cand + (1 - sig(z[k])) * merged;
    }
    return out;
  }

  // Row-major recursion for the forward MDGRU, reverse row-major for the
  // backward one.
  Mat scan(const std::string& pre, const Mat& x, const Mat& prev, std::size_t n, bool fwd) const {
    const std::size_t d = x[0].size();
    const std::vector<double> zero(d, 0.0);
    Mat out(n * n);
    for (std::size_t s = 0; s < n * n; ++s) {
      const std::size_t c = fwd ? s : n * n - 1 - s;
      const std::size_t m = c / n, k = c % n;
      const bool has_up = fwd ? m > 0 : m + 1 < n;
      const bool has_side = fwd ? k > 0 : k + 1 < n;
      const auto& up = has_up ? out[fwd ? c - n : c + n] : zero;
      const auto& side = has_side ? out[fwd ? c - 1 : c + 1] : zero;
      out[c] = mdgru(pre, x[c], prev[c], up, side);
    }
    return out;
  }

  Mat pair_relu(const Mat& rows, const std::string& w, const std::string& b) const {
    const std::size_t n = rows.size();
    Mat out;
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t k = 0; k < n; ++k) {
        auto v = affine(cat({rows[m], rows[k]}), w, b);
        for (double& e : v) e = relu(e);
        out.push_back(v);
      }
    }
    return out;
  }

  Mat sequence(std::size_t l, const Mat& in, const Mat& table) const {
    const std::string pre = "layer" + std::to_string(l);
    const std::size_t n = in.size(), d = in[0].size();
    Mat states;
    std::vector<double> h(d, 0.0);
    for (const auto& x : in) states.push_back(h = gru(pre + ".gru", x, h));
    if (!cfg_.use_tga) return states;
    Mat concat(n);
    for (std::size_t i = 1; i <= cfg_.heads; ++i) {
      const std::string v = pre + ".tga.v" + std::to_string(i);
      const std::string w = pre + ".tga.W" + std::to_string(i);
      Mat proj;
      for (const auto& s : states) proj.push_back(affine(s, w));
      for (std::size_t m = 0; m < n; ++m) {
        std::vector<double> score(n);
        double mx = -1e300;
        for (std::size_t k = 0; k < n; ++k) {
          score[k] = affine(table[m * n + k], v)[0] / std::sqrt(static_cast<double>(d));
          mx = std::max(mx, score[k]);
        }
        double total = 0.0;
        for (double& s : score) total += s = std::exp(s - mx);
        std::vector<double> head(proj[0].size(), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
          for (std::size_t j = 0; j < head.size(); ++j) head[j] += score[k] / total * proj[k][j];
        }
        concat[m].insert(concat[m].end(), head.begin(), head.end());
      }
    }
    Mat out;
    for (const auto& row : concat) out.push_back(affine(row, pre + ".tga.W_o"));
    return out;
  }

  RefOutput forward(const Mat& embeddings) const {
    const std::size_t n = embeddings.size();
    Mat base;
    for (const auto& x : embeddings) base.push_back(affine(x, "base.W", "base.b"));
    Mat table = pair_relu(base, "table_init.W", "table_init.b");
    Mat seq = base;
    const std::size_t d = base[0].size();
    for (std::size_t l = 1; l <= cfg_.layers; ++l) {
      const std::string pre = "layer" + std::to_string(l);
      const Mat x = cfg_.use_sfi ? pair_relu(seq, pre + ".sfi.W", pre + ".sfi.b")
                                 : Mat(n * n, std::vector<double>(d, 0.0));
      const Mat f = scan(pre + ".mdgru1", x, table, n, true);
      const Mat b = scan(pre + ".mdgru2", x, table, n, false);
      for (std::size_t c = 0; c < n * n; ++c) {
        table[c] = affine(cat({f[c], b[c]}), pre + ".table.W", pre + ".table.b");
      }
      seq = sequence(l, seq, table);
    }
    RefOutput out;
    for (const auto& s : seq) out.seq_logits.push_back(affine(s, "head.seq.W", "head.seq.b"));
    for (const auto& t : table) out.table.push_back(affine(t, "head.table.W", "head.table.b"));
    return out;
  }

 private:
  const num::ParameterStore& store_;
  RefConfig cfg_;
};

}  // namespace aste::testing

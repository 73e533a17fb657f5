#include "aste/model/model.hpp"

#include <cmath>
#include <cstdint>
#include <utility>

#include "aste/errors.hpp"

namespace aste::model {

namespace {

Var affine_rows(Var in, Parameter* w, Parameter* b) {
  Graph& g = in.graph();
  return num::add_row_bias(num::matmul(in, g.parameter(*w)), g.parameter(*b));
}

// [N x d] -> [N*N x 2d] with row m*N+n = [rows_m; rows_n].
Var pair_rows(Var rows) {
  const std::size_t n = rows.shape()[0];
  std::vector<std::int64_t> left(n * n), right(n * n);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      left[m * n + k] = static_cast<std::int64_t>(m);
      right[m * n + k] = static_cast<std::int64_t>(k);
    }
  }
  return num::concat({num::gather_rows(rows, left), num::gather_rows(rows, right)}, 1);
}

std::size_t table_side(Var table) {
  const std::size_t cells = table.shape()[0];
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(cells))));
  if (n * n != cells) {
    throw DimensionError("table with " + std::to_string(cells) + " rows is not square");
  }
  return n;
}

void require_shape(const char* what, Var v, const num::Shape& expected) {
  if (v.shape() != expected) {
    throw DimensionError(std::string(what) + ": expected " + num::shape_string(expected) +
                         ", got " + num::shape_string(v.shape()));
  }
}

// Cell groups in execution order. Every cell's two scan neighbours sit in
// earlier groups.
std::vector<std::vector<std::size_t>> scan_groups(std::size_t n, bool forward, ScanOrder order) {
  std::vector<std::vector<std::size_t>> groups;
  if (order == ScanOrder::kRowMajor) {
    for (std::size_t i = 0; i < n * n; ++i) groups.push_back({forward ? i : n * n - 1 - i});
    return groups;
  }
  for (std::size_t step = 0; step + 1 < 2 * n; ++step) {
    const std::size_t diag = forward ? step : 2 * n - 2 - step;
    std::vector<std::size_t> cells;
    for (std::size_t m = 0; m < n; ++m) {
      if (diag >= m && diag - m < n) cells.push_back(m * n + (diag - m));
    }
    groups.push_back(std::move(cells));
  }
  return groups;
}

// One MDGRU pass over the table. `forward` takes neighbours (m-1,n) and
// (m,n-1), otherwise (m+1,n) and (m,n+1); missing neighbours are zero.
Var scan_table(const cells::MdgruParams& p, Var inputs, Var prev, std::size_t n, bool forward,
               ScanOrder order) {
  Graph& g = inputs.graph();
  const std::size_t d = p.hidden_size();
  const auto groups = scan_groups(n, forward, order);

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> group_of(n * n, kNone), row_of(n * n, 0);
  std::vector<Var> outputs;
  outputs.reserve(groups.size());

  const auto neighbour = [&](std::size_t cell, bool vertical) -> std::int64_t {
    const std::size_t m = cell / n, k = cell % n;
    if (forward) {
      if (vertical) return m == 0 ? -1 : static_cast<std::int64_t>(cell - n);
      return k == 0 ? -1 : static_cast<std::int64_t>(cell - 1);
    }
    if (vertical) return m + 1 == n ? -1 : static_cast<std::int64_t>(cell + n);
    return k + 1 == n ? -1 : static_cast<std::int64_t>(cell + 1);
  };

  // Rows of earlier outputs for the given cells (-1 = zero row).
  const auto gather_states = [&](const std::vector<std::int64_t>& cells) -> Var {
    std::size_t source = kNone;
    bool mixed = false;
    for (std::int64_t c : cells) {
      if (c < 0) continue;
      const std::size_t grp = group_of[static_cast<std::size_t>(c)];
      if (grp == kNone) throw InternalError("scan order visits a cell before its neighbour");
      if (source == kNone) source = grp;
      mixed |= grp != source;
    }
    if (source == kNone) return g.constant(Tensor({cells.size(), d}));
    if (!mixed) {
      std::vector<std::int64_t> rows;
      rows.reserve(cells.size());
      for (std::int64_t c : cells) {
        rows.push_back(c < 0 ? -1 : static_cast<std::int64_t>(row_of[static_cast<std::size_t>(c)]));
      }
      return num::gather_rows(outputs[source], rows);
    }
    std::vector<Var> parts;
    for (std::int64_t c : cells) {
      if (c < 0) {
        parts.push_back(g.constant(Tensor({1, d})));
        continue;
      }
      const auto cell = static_cast<std::size_t>(c);
      const std::int64_t row = static_cast<std::int64_t>(row_of[cell]);
      parts.push_back(num::gather_rows(outputs[group_of[cell]], std::span(&row, 1)));
    }
    return num::concat(parts, 0);
  };

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& cells = groups[gi];
    std::vector<std::int64_t> self, up, side;
    for (std::size_t c : cells) {
      self.push_back(static_cast<std::int64_t>(c));
      up.push_back(neighbour(c, true));
      side.push_back(neighbour(c, false));
    }
    const Var out = cells::mdgru_step(p, num::gather_rows(inputs, self),
                                      num::gather_rows(prev, self), gather_states(up),
                                      gather_states(side));
    for (std::size_t r = 0; r < cells.size(); ++r) {
      group_of[cells[r]] = gi;
      row_of[cells[r]] = r;
    }
    outputs.push_back(out);
  }

  // Back to row-major cell order.
  std::vector<std::int64_t> perm(n * n);
  std::size_t offset = 0;
  for (const auto& cells : groups) {
    for (std::size_t r = 0; r < cells.size(); ++r) {
      perm[cells[r]] = static_cast<std::int64_t>(offset + r);
    }
    offset += cells.size();
  }
  return num::gather_rows(outputs.size() == 1 ? outputs[0] : num::concat(outputs, 0), perm);
}

}  // namespace

void ModelConfig::validate() const {
  if (d_w == 0 || d_h == 0) throw UsageError("d_w and d_h must be positive");
  if (layers == 0) throw UsageError("layers must be at least 1");
  if (heads == 0 || d_h % heads != 0) {
    throw UsageError("d_h (" + std::to_string(d_h) + ") must be divisible by heads (" +
                     std::to_string(heads) + ")");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must be in [0, 1)");
  if (max_len == 0) throw UsageError("max_len must be positive");
}

Model::Model(const ModelConfig& config, num::Rng& init_rng) : config_(config) {
  config_.validate();
  const std::size_t dw = config_.d_w, d = config_.d_h;
  base_w_ = &store_.weight("base.W", {dw, d}, init_rng);
  base_b_ = &store_.bias("base.b", {d});
  init_w_ = &store_.weight("table_init.W", {2 * d, d}, init_rng);
  init_b_ = &store_.bias("table_init.b", {d});

  for (std::size_t l = 1; l <= config_.layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    LayerParams lp;
    lp.gru = cells::GruParams::create(store_, prefix + "gru", d, init_rng);
    if (config_.use_tga) {
      for (std::size_t i = 1; i <= config_.heads; ++i) {
        lp.tga_v.push_back(&store_.weight(prefix + "tga.v" + std::to_string(i), {d, 1}, init_rng));
        lp.tga_w.push_back(&store_.weight(prefix + "tga.W" + std::to_string(i),
                                          {d, d / config_.heads}, init_rng));
      }
      lp.tga_out = &store_.weight(prefix + "tga.W_o", {d, d}, init_rng);
    }
    if (config_.use_sfi) {
      lp.sfi_w = &store_.weight(prefix + "sfi.W", {2 * d, d}, init_rng);
      lp.sfi_b = &store_.bias(prefix + "sfi.b", {d});
    }
    lp.mdgru_fwd = cells::MdgruParams::create(store_, prefix + "mdgru1", d, init_rng);
    lp.mdgru_bwd = cells::MdgruParams::create(store_, prefix + "mdgru2", d, init_rng);
    lp.table_w = &store_.weight(prefix + "table.W", {2 * d, d}, init_rng);
    lp.table_b = &store_.bias(prefix + "table.b", {d});
    layers_.push_back(std::move(lp));
  }

  seq_head_w_ = &store_.weight("head.seq.W", {d, static_cast<std::size_t>(kNumTags)}, init_rng);
  seq_head_b_ = &store_.bias("head.seq.b", {static_cast<std::size_t>(kNumTags)});
  table_head_w_ = &store_.weight("head.table.W", {d, static_cast<std::size_t>(kNumTableLabels)}, init_rng);
  table_head_b_ = &store_.bias("head.table.b", {static_cast<std::size_t>(kNumTableLabels)});
}

Var Model::base_encode(Var embeddings, bool training, num::Rng& rng) const {
  if (embeddings.shape().size() != 2 || embeddings.shape()[1] != config_.d_w) {
    throw DimensionError("base_encode: expected [N x " + std::to_string(config_.d_w) +
                         "], got " + num::shape_string(embeddings.shape()));
  }
  return affine_rows(num::dropout(embeddings, config_.dropout, training, rng), base_w_, base_b_);
}

Var Model::init_table(Var base) const {
  require_shape("init_table", base, {base.shape().at(0), config_.d_h});
  return num::relu(affine_rows(pair_rows(base), init_w_, init_b_));
}

Var Model::sfi(std::size_t l, Var seq) const {
  const LayerParams& lp = layer(l);
  if (!lp.sfi_w) throw UsageError("sfi is disabled in this model");
  require_shape("sfi", seq, {seq.shape().at(0), config_.d_h});
  return num::relu(affine_rows(pair_rows(seq), lp.sfi_w, lp.sfi_b));
}

Var Model::table_layer(std::size_t l, Var prev_table, Var cell_inputs, ScanOrder order) const {
  const LayerParams& lp = layer(l);
  const std::size_t n = table_side(prev_table);
  require_shape("table_layer previous table", prev_table, {n * n, config_.d_h});
  require_shape("table_layer inputs", cell_inputs, {n * n, config_.d_h});
  const Var fwd = scan_table(lp.mdgru_fwd, cell_inputs, prev_table, n, true, order);
  const Var bwd = scan_table(lp.mdgru_bwd, cell_inputs, prev_table, n, false, order);
  return affine_rows(num::concat({fwd, bwd}, 1), lp.table_w, lp.table_b);
}

SequenceTrace Model::sequence_layer_traced(std::size_t l, Var seq_in, Var table) const {
  const LayerParams& lp = layer(l);
  const std::size_t n = seq_in.shape().at(0);
  require_shape("sequence_layer input", seq_in, {n, config_.d_h});
  require_shape("sequence_layer table", table, {n * n, config_.d_h});
  Graph& g = seq_in.graph();

  SequenceTrace t;
  t.gru_states = cells::gru_sequence(lp.gru, seq_in);
  if (!config_.use_tga) {
    t.output = t.gru_states;
    return t;
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(config_.d_h));
  std::vector<Var> heads;
  for (std::size_t i = 0; i < config_.heads; ++i) {
    const Var scores =
        num::scale(num::reshape(num::matmul(table, g.parameter(*lp.tga_v[i])), {n, n}), inv_sqrt);
    const Var attention = num::softmax(scores, 1);
    t.attention.push_back(attention);
    heads.push_back(num::matmul(attention, num::matmul(t.gru_states, g.parameter(*lp.tga_w[i]))));
  }
  t.output = num::matmul(num::concat(heads, 1), g.parameter(*lp.tga_out));
  return t;
}

Var Model::sequence_layer(std::size_t l, Var seq_in, Var table) const {
  return sequence_layer_traced(l, seq_in, table).output;
}

SentenceOutput Model::forward(Graph& g, const Tensor& embeddings, bool training, num::Rng& rng,
                              ScanOrder order) const {
  const std::size_t n = embeddings.rank() == 2 ? embeddings.dim(0) : 0;
  if (n == 0) throw DataError("cannot run the model on an empty sentence");
  if (n > config_.max_len) {
    throw DataError("sentence has " + std::to_string(n) + " tokens, maximum is " +
                    std::to_string(config_.max_len));
  }
  const Var base = base_encode(g.constant(embeddings), training, rng);
  Var table = init_table(base);
  Var seq = base;
  for (std::size_t l = 1; l <= config_.layers; ++l) {
    const Var inputs = config_.use_sfi ? sfi(l, seq) : g.constant(Tensor({n * n, config_.d_h}));
    table = num::dropout(table_layer(l, table, inputs, order), config_.dropout, training, rng);
    seq = num::dropout(sequence_layer(l, seq, table), config_.dropout, training, rng);
  }
  SentenceOutput out;
  out.length = n;
  out.seq_logits = affine_rows(seq, seq_head_w_, seq_head_b_);
  out.table_logits = affine_rows(table, table_head_w_, table_head_b_);
  return out;
}

Tensor embed(const std::vector<std::string>& tokens, const Vocabulary& vocab, const Tensor& table) {
  if (table.rank() != 2) throw DimensionError("embedding table must be a matrix");
  const std::size_t dw = table.dim(1);
  Tensor out({tokens.size(), dw});
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto row = static_cast<std::size_t>(vocab.index(tokens[i]));
    if (row >= table.dim(0)) throw DimensionError("embedding table smaller than vocabulary");
    for (std::size_t k = 0; k < dw; ++k) out.at(i, k) = table.at(row, k);
  }
  return out;
}

Var sentence_loss(const SentenceOutput& out, const Sentence& gold) {
  const std::size_t n = out.length;
  if (gold.size() != n || gold.gold_tags.size() != n || gold.gold_table.size() != n) {
    throw DimensionError("gold labels of " + gold.id + " do not match the output length");
  }
  std::vector<int> tags(n), cells(n * n);
  for (std::size_t i = 0; i < n; ++i) tags[i] = static_cast<int>(gold.gold_tags[i]);
  for (std::size_t i = 0; i < n * n; ++i) cells[i] = static_cast<int>(gold.gold_table.cells()[i]);
  return num::add(num::cross_entropy(out.seq_logits, tags),
                  num::cross_entropy(out.table_logits, cells));
}

Var joint_loss(Var seq_logits, Var table_logits, const Batch& batch,
               std::span<const Sentence> sentences) {
  const std::size_t len = batch.max_length;
  std::vector<int> tags(batch.size() * len, 0), cells(batch.size() * len * len, 0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Sentence& s = sentences[batch.indices[b]];
    if (s.size() != batch.lengths[b] || s.size() > len) {
      throw DimensionError("batch length does not match sentence " + s.id);
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      tags[b * len + i] = static_cast<int>(s.gold_tags[i]);
      for (std::size_t k = 0; k < s.size(); ++k) {
        cells[(b * len + i) * len + k] = static_cast<int>(s.gold_table.at(i, k));
      }
    }
  }
  return num::add(num::cross_entropy(seq_logits, tags, batch.token_mask),
                  num::cross_entropy(table_logits, cells, batch.table_mask));
}

Var batch_loss(Graph& g, const Model& model, const Batch& batch,
               std::span<const Sentence> sentences, std::span<const Tensor> embeddings,
               bool training, num::Rng& rng) {
  if (batch.size() == 0) return g.constant(Tensor::scalar(0.0));
  const std::size_t len = batch.max_length;
  std::vector<Var> seq_parts, table_parts;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t idx = batch.indices[b];
    const SentenceOutput out = model.forward(g, embeddings[idx], training, rng);
    const std::size_t n = out.length;
    std::vector<std::int64_t> seq_rows(len, -1), table_rows(len * len, -1);
    for (std::size_t i = 0; i < n; ++i) {
      seq_rows[i] = static_cast<std::int64_t>(i);
      for (std::size_t k = 0; k < n; ++k) {
        table_rows[i * len + k] = static_cast<std::int64_t>(i * n + k);
      }
    }
    seq_parts.push_back(num::gather_rows(out.seq_logits, seq_rows));
    table_parts.push_back(num::gather_rows(out.table_logits, table_rows));
  }
  return joint_loss(num::concat(seq_parts, 0), num::concat(table_parts, 0), batch, sentences);
}

}  // namespace aste::model

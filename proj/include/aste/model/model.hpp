#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aste/cells/cells.hpp"
#include "aste/corpus/batch.hpp"
#include "aste/corpus/types.hpp"
#include "aste/corpus/vocab.hpp"
#include "aste/numerics/graph.hpp"
#include "aste/numerics/parameters.hpp"

namespace aste::model {

using num::Graph;
using num::Parameter;
using num::Tensor;
using num::Var;

struct ModelConfig {
  std::size_t d_w = 300;
  std::size_t d_h = 200;
  std::size_t layers = 3;
  std::size_t heads = 8;
  double dropout = 0.5;
  std::size_t max_len = 120;
  // Ablation switches. Without TGA the sequence layer returns the GRU states;
  // without SFI the table layer gets zero input features.
  bool use_tga = true;
  bool use_sfi = true;

  // Throws UsageError on an inconsistent configuration.
  void validate() const;
};

// Order in which the table layer visits cells. Both are valid for the
// MDGRU dependencies and give bitwise identical results.
enum class ScanOrder { kWavefront, kRowMajor };

struct LayerParams {
  cells::GruParams gru;
  std::vector<Parameter*> tga_v;  // [d_h x 1] each
  std::vector<Parameter*> tga_w;  // [d_h x d_h/h] each
  Parameter* tga_out = nullptr;   // [d_h x d_h]
  Parameter* sfi_w = nullptr;     // [2d_h x d_h]
  Parameter* sfi_b = nullptr;
  cells::MdgruParams mdgru_fwd;   // neighbours (m-1,n), (m,n-1)
  cells::MdgruParams mdgru_bwd;   // neighbours (m+1,n), (m,n+1)
  Parameter* table_w = nullptr;   // [2d_h x d_h]
  Parameter* table_b = nullptr;
};

// Per-sentence outputs. Table rows are cells in row-major order: row m*N+n
// holds cell (m, n).
struct SentenceOutput {
  Var seq_logits;    // [N x 5]
  Var table_logits;  // [N*N x 4]
  std::size_t length = 0;
};

// Attention weights of one sequence layer, [N x N] per head.
struct SequenceTrace {
  Var output;
  Var gru_states;
  std::vector<Var> attention;
};

class Model {
 public:
  // Parameters are created in a fixed order, all weights drawn from `init_rng`.
  Model(const ModelConfig& config, num::Rng& init_rng);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  num::ParameterStore& parameters() { return store_; }
  const num::ParameterStore& parameters() const { return store_; }
  const LayerParams& layer(std::size_t l) const { return layers_.at(l - 1); }

  // [N x d_w] -> [N x d_h]. Dropout on the embeddings in training mode.
  Var base_encode(Var embeddings, bool training, num::Rng& rng) const;
  // [N x d_h] -> [N*N x d_h]
  Var init_table(Var base) const;
  // Sequence features -> [N*N x d_h] cell inputs of layer l (1-based).
  Var sfi(std::size_t l, Var seq) const;
  // [N*N x d_h] previous table and cell inputs -> [N*N x d_h].
  Var table_layer(std::size_t l, Var prev_table, Var cell_inputs,
                  ScanOrder order = ScanOrder::kWavefront) const;
  // Layer input [N x d_h] and this layer's table -> [N x d_h].
  Var sequence_layer(std::size_t l, Var seq_in, Var table) const;
  SequenceTrace sequence_layer_traced(std::size_t l, Var seq_in, Var table) const;

  // Full network on one sentence given its embedding rows [N x d_w].
  SentenceOutput forward(Graph& g, const Tensor& embeddings, bool training, num::Rng& rng,
                         ScanOrder order = ScanOrder::kWavefront) const;

 private:
  ModelConfig config_;
  num::ParameterStore store_;
  Parameter* base_w_ = nullptr;
  Parameter* base_b_ = nullptr;
  Parameter* init_w_ = nullptr;
  Parameter* init_b_ = nullptr;
  std::vector<LayerParams> layers_;
  Parameter* seq_head_w_ = nullptr;
  Parameter* seq_head_b_ = nullptr;
  Parameter* table_head_w_ = nullptr;
  Parameter* table_head_b_ = nullptr;
};

// [N x d_w] rows of `table` for the tokens, looked up through `vocab`.
Tensor embed(const std::vector<std::string>& tokens, const Vocabulary& vocab, const Tensor& table);

// Summed cross-entropy of BIO tags and all N*N table cells of one sentence.
Var sentence_loss(const SentenceOutput& out, const Sentence& gold);

// Joint loss over padded logits. seq_logits is [B*M x 5] and table_logits
// [B*M*M x 4] for batch max length M; masked positions are ignored.
Var joint_loss(Var seq_logits, Var table_logits, const Batch& batch,
               std::span<const Sentence> sentences);

// Runs the model on every sentence of the batch, pads the logits to the batch
// length and returns the masked joint loss.
Var batch_loss(Graph& g, const Model& model, const Batch& batch,
               std::span<const Sentence> sentences, std::span<const Tensor> embeddings,
               bool training, num::Rng& rng);

}  // namespace aste::model

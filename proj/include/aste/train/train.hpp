#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aste/corpus/types.hpp"
#include "aste/decode/decode.hpp"
#include "aste/evaluate/evaluate.hpp"
#include "aste/model/model.hpp"
#include "aste/numerics/rng.hpp"

namespace aste::train {

using model::Model;
using model::ModelConfig;
using num::Tensor;

struct TrainConfig {
  double lr = 1e-3;
  double decay_rate = 0.05;
  std::size_t decay_step = 1000;
  std::size_t batch_size = 6;
  std::size_t max_steps = 5000;
  std::size_t eval_interval = 100;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // Throws UsageError. max_steps may be 0.
  void validate() const;
};

// Staircase inverse-time decay: lr / (1 + decay_rate * floor(step / decay_step)).
double lr_at(const TrainConfig& c, std::size_t step);

// Adam with bias correction. Moments live alongside the parameters they
// belong to, in store order.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Applies update number `t` (1-based) to every parameter, then zeroes the
  // gradients. A parameter without a gradient is an InternalError, a
  // non-finite gradient a NumericError. In 32-bit mode parameters and moments
  // are rounded to float.
  void step(num::ParameterStore& store, double lr, std::size_t t);

  // Zero moments for every parameter if not yet present.
  void ensure_state(const num::ParameterStore& store);
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  double beta1_, beta2_, eps_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  std::size_t step = 0;              // completed updates
  num::Rng epoch_rng;                // data-order rng as of the current epoch's start
  std::size_t batch_cursor = 0;      // batches of the current epoch already used
  num::Rng dropout_rng;
  double best_f1 = -1.0;             // -1 before the first evaluation
  std::size_t best_step = 0;
};

// Fresh state for a seed; the model init rng is Rng(seed).
TrainState initial_state(std::uint64_t seed);

struct NamedTensor {
  std::string name;
  Tensor value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  TrainState state;
  std::vector<NamedTensor> tensors;  // parameters, then adam.m/<name>, adam.v/<name>
};

inline constexpr int kCheckpointVersion = 1;

Checkpoint capture(const Model& m, const Adam& adam, const TrainConfig& tc, const TrainState& st);
// Copies tensors into a model built from ckpt.model (and the optimizer).
// Missing or misshapen tensors raise VersionError.
void restore(const Checkpoint& ckpt, Model& m, Adam& adam);

void write_checkpoint(std::ostream& out, const Checkpoint& c);
Checkpoint read_checkpoint(std::istream& in, const std::string& where);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Sentences with their embedding rows, aligned by position.
struct Dataset {
  std::vector<Sentence> sentences;
  std::vector<Tensor> embeddings;
};

// Looks up each sentence's embedding rows.
Dataset attach_embeddings(std::vector<Sentence> sentences, const Vocabulary& vocab,
                          const Tensor& table);

std::vector<decode::Prediction> predict_all(const Model& m, std::span<const Tensor> embeddings);
evaluate::ScoreReport evaluate_model(const Model& m, const Dataset& data);

struct FitResult {
  std::optional<Checkpoint> best;  // set when this run found a new best
  Checkpoint last;
  std::vector<double> losses;      // training loss of each step taken
};

// Trains from `state` up to tc.max_steps. Every eval_interval steps (and at
// the last step) the dev set is scored; a strictly higher F1 becomes the new
// best. A fresh run (step 0) also scores the untrained model. Log lines are
// key=value.
FitResult fit(Model& m, Adam& adam, const TrainConfig& tc, TrainState state,
              const Dataset& train_set, const Dataset& dev_set, std::ostream* log = nullptr);

}  // namespace aste::train

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aste/corpus/types.hpp"
#include "aste/numerics/rng.hpp"

namespace aste {

// A group of sentences padded to a common length.
struct Batch {
  std::vector<std::size_t> indices;  // positions in the source sentence list
  std::vector<std::size_t> lengths;
  std::size_t max_length = 0;
  // [batch x max_length], 1 for real tokens.
  std::vector<std::uint8_t> token_mask;
  // [batch x max_length x max_length], 1 where both row and column are real.
  std::vector<std::uint8_t> table_mask;

  std::size_t size() const { return indices.size(); }
  std::uint8_t token(std::size_t b, std::size_t i) const { return token_mask[b * max_length + i]; }
  std::uint8_t cell(std::size_t b, std::size_t m, std::size_t n) const {
    return table_mask[(b * max_length + m) * max_length + n];
  }
};

// Batch over the given sentence positions, in order.
Batch make_batch(std::span<const Sentence> sentences, std::span<const std::size_t> indices);

// One epoch: a permutation drawn from `rng`, cut into consecutive batches of
// `batch_size` (the last may be smaller).
std::vector<Batch> batchify(std::span<const Sentence> sentences, std::size_t batch_size,
                            num::Rng& rng);

// Fisher-Yates permutation of 0..n-1 driven by `rng`.
std::vector<std::size_t> shuffled_order(std::size_t n, num::Rng& rng);

}  // namespace aste

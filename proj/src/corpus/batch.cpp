#include "aste/corpus/batch.hpp"

#include <algorithm>
#include <numeric>

#include "aste/errors.hpp"

namespace aste {

Batch make_batch(std::span<const Sentence> sentences, std::span<const std::size_t> indices) {
  Batch b;
  b.indices.assign(indices.begin(), indices.end());
  for (std::size_t i : indices) {
    if (i >= sentences.size()) throw UsageError("batch index out of range");
    b.lengths.push_back(sentences[i].size());
    b.max_length = std::max(b.max_length, sentences[i].size());
  }
  const std::size_t L = b.max_length;
  b.token_mask.assign(b.size() * L, 0);
  b.table_mask.assign(b.size() * L * L, 0);
  for (std::size_t k = 0; k < b.size(); ++k) {
    const std::size_t n = b.lengths[k];
    for (std::size_t i = 0; i < n; ++i) b.token_mask[k * L + i] = 1;
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t c = 0; c < n; ++c) b.table_mask[(k * L + m) * L + c] = 1;
    }
  }
  return b;
}

std::vector<std::size_t> shuffled_order(std::size_t n, num::Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<Batch> batchify(std::span<const Sentence> sentences, std::size_t batch_size,
                            num::Rng& rng) {
  if (batch_size == 0) throw UsageError("batch size must be at least 1");
  const std::vector<std::size_t> order = shuffled_order(sentences.size(), rng);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.push_back(make_batch(sentences, std::span(order).subspan(start, end - start)));
  }
  return batches;
}

}  // namespace aste

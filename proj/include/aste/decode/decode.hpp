#pragma once

#include <span>
#include <string>
#include <vector>

#include "aste/corpus/types.hpp"
#include "aste/numerics/tensor.hpp"

namespace aste::decode {

struct SpanSet {
  std::vector<Span> targets;
  std::vector<Span> opinions;
};

struct Prediction {
  std::vector<Span> targets;
  std::vector<Span> opinions;
  std::vector<Triplet> triplets;  // target-major, both in span order
};

// Per-row argmax of [N x 5] logits; ties go to the lower tag index.
std::vector<Tag> argmax_tags(const num::Tensor& seq_logits);

// BIO decoding. B-X starts a span, I-X extends an open X span, and an I-X with
// no open X span starts one.
SpanSet extract_spans(std::span<const Tag> tags);

// Row-wise softmax of [N*N x 4] table logits.
num::Tensor table_probabilities(const num::Tensor& table_logits);

// Label whose probability mass, summed over every cell pairing a target token
// with an opinion token (both orientations), is largest. N/A competes too;
// ties go to the lower label index.
TableLabel aggregate_sentiment(const num::Tensor& table_probs, std::size_t n, Span target,
                               Span opinion);

Prediction decode_triplets(const num::Tensor& seq_logits, const num::Tensor& table_logits);

// One-hot logits (+20 / -20) reproducing a prepared sentence's gold tags and
// table. Decoding them gives back the gold triplets.
struct Logits {
  num::Tensor seq;    // [N x 5]
  num::Tensor table;  // [N*N x 4]
};
Logits gold_logits(const Sentence& s);

// One line in the dataset file format.
std::string format_prediction(const std::vector<std::string>& tokens, const Prediction& p);

}  // namespace aste::decode

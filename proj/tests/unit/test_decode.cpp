#include <algorithm>
#include <set>
#include <utility>

#include "aste/corpus/labels.hpp"
#include "aste/decode/decode.hpp"
#include "aste/errors.hpp"
#include "doctest.h"
#include "support/gradcheck.hpp"
#include "support/synthetic.hpp"

using namespace aste;
using namespace aste::decode;
using num::Tensor;

namespace {

std::vector<Triplet> sorted(std::vector<Triplet> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("extract_spans examples") {
  using T = Tag;
  const std::vector<Tag> s2 = {T::kBOpinion, T::kBTarget, T::kO, T::kBTarget};
  const auto a = extract_spans(s2);
  CHECK(a.opinions == std::vector<Span>{{0, 0}});
  CHECK(a.targets == std::vector<Span>{{1, 1}, {3, 3}});

  CHECK(extract_spans(std::vector<Tag>(4, T::kO)).targets.empty());
  CHECK(extract_spans(std::vector<Tag>(4, T::kO)).opinions.empty());

  const auto stray = extract_spans(std::vector<Tag>{T::kITarget, T::kITarget});
  CHECK(stray.targets == std::vector<Span>{{0, 1}});

  const auto mixed = extract_spans(
      std::vector<Tag>{T::kBTarget, T::kITarget, T::kIOpinion, T::kBTarget, T::kBTarget,
                       T::kITarget, T::kO, T::kIOpinion});
  CHECK(mixed.targets == std::vector<Span>{{0, 1}, {3, 3}, {4, 5}});
  CHECK(mixed.opinions == std::vector<Span>{{2, 2}, {7, 7}});
  CHECK(extract_spans(std::vector<Tag>{}).targets.empty());
}

TEST_CASE("argmax ties go to the lower index") {
  const Tensor logits = Tensor::matrix({{0, 0, 0, 0, 0}, {1, 3, 3, 0, 0}, {0, 0, 0, 0, 2}});
  CHECK(argmax_tags(logits) == std::vector<Tag>{Tag::kO, Tag::kBTarget, Tag::kIOpinion});
}

TEST_CASE("aggregate_sentiment examples") {
  const std::size_t n = 3;
  Tensor uniform({n * n, 4}, std::vector<double>(n * n * 4, 0.25));
  CHECK(aggregate_sentiment(uniform, n, {0, 0}, {2, 2}) == TableLabel::kNone);

  Tensor probs({n * n, 4});
  for (std::size_t c = 0; c < n * n; ++c) probs.at(c, 0) = 1.0;
  for (std::size_t c : {0 * n + 2, 2 * n + 0}) {
    probs.at(c, 0) = 0.0;
    probs.at(c, 1) = 1.0;
  }
  CHECK(aggregate_sentiment(probs, n, {0, 0}, {2, 2}) == TableLabel::kPos);
  CHECK(aggregate_sentiment(probs, n, {1, 1}, {2, 2}) == TableLabel::kNone);
  CHECK_THROWS_AS(aggregate_sentiment(probs, n, {0, 1}, {1, 2}), UsageError);
}

TEST_CASE("aggregate_sentiment matches brute-force enumeration of the pair cells") {
  num::Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 4;
    const Tensor probs = table_probabilities(testing::random_tensor({n * n, 4}, rng, -3, 3));
    // 2-token target and a disjoint opinion.
    const int ts = static_cast<int>(rng.below(3));
    const Span target{ts, ts + 1};
    std::vector<int> free;
    for (int i = 0; i < 4; ++i) {
      if (!target.contains(i)) free.push_back(i);
    }
    const int os = free[rng.below(free.size())];
    const Span opinion{os, os};

    std::set<std::pair<int, int>> cells;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        if ((target.contains(a) && opinion.contains(b)) ||
            (opinion.contains(a) && target.contains(b))) {
          cells.insert({a, b});
        }
      }
    }
    CHECK(cells.size() == 4);
    int best = -1;
    double best_mass = -1.0;
    for (int label = 0; label < 4; ++label) {
      double mass = 0.0;
      for (const auto& [a, b] : cells) mass += probs.at(static_cast<std::size_t>(a * 4 + b), label);
      if (mass > best_mass) {
        best_mass = mass;
        best = label;
      }
    }
    CHECK(static_cast<int>(aggregate_sentiment(probs, n, target, opinion)) == best);
  }
}

TEST_CASE("decode_triplets on hand-built logits") {
  // "fries and burgers were great": targets 0 and 2 share opinion 4.
  const std::size_t n = 5;
  Tensor seq({n, 5}, std::vector<double>(n * 5, 0.0));
  seq.at(0, 1) = 5;
  seq.at(1, 0) = 5;
  seq.at(2, 1) = 5;
  seq.at(3, 0) = 5;
  seq.at(4, 2) = 5;
  Tensor table({n * n, 4}, std::vector<double>(n * n * 4, 0.0));
  for (std::size_t c = 0; c < n * n; ++c) table.at(c, 0) = 4;
  for (std::size_t t : {0u, 2u}) {
    table.at(t * n + 4, 1) = 9;
    table.at(4 * n + t, 1) = 9;
  }
  const Prediction p = decode_triplets(seq, table);
  CHECK(p.triplets == std::vector<Triplet>{{{0, 0}, Sentiment::kPos, {4, 4}},
                                           {{2, 2}, Sentiment::kPos, {4, 4}}});

  // No targets, nothing emitted whatever the table says.
  Tensor no_targets({n, 5});
  no_targets.at(4, 2) = 1;
  for (std::size_t c = 0; c < n * n; ++c) table.at(c, 2) = 50;
  CHECK(decode_triplets(no_targets, table).triplets.empty());
  CHECK_THROWS_AS(decode_triplets(seq, Tensor({n * n - 1, 4})), DimensionError);
}

TEST_CASE("gold logits decode back to the gold triplets") {
  num::Rng rng(32);
  int nonempty = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Sentence s = testing::random_clean_sentence(rng, 14, 5);
    prepare_sentence(s);
    const auto [seq, table] = decode::gold_logits(s);
    const Prediction p = decode_triplets(seq, table);
    CHECK(sorted(p.triplets) == sorted(s.triplets));
    CHECK(p.triplets.size() <= p.targets.size() * p.opinions.size());
    CHECK(decode_triplets(seq, table).triplets == p.triplets);
    nonempty += !s.triplets.empty();
  }
  CHECK(nonempty > 300);
}

TEST_CASE("prediction line uses the dataset format") {
  Prediction p;
  p.triplets = {{{1, 1}, Sentiment::kPos, {0, 0}}};
  CHECK(format_prediction({"good", "food"}, p) == "good food####[([1], [0], 'POS')]");
}

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aste/corpus/types.hpp"

namespace aste::evaluate {

using TripletSet = std::vector<Triplet>;

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  // Each is 0 when its denominator is 0.
  double precision() const;
  double recall() const;
  double f1() const;

  Counts& operator+=(const Counts& o);
  friend bool operator==(const Counts&, const Counts&) = default;
};

// Sentences grouped by their gold triplet count. The "0" bucket only appears
// when the data has sentences without triplets.
struct Bucket {
  std::string label;  // "0", "1", "2", "3", ">=4"
  std::size_t sentences = 0;
  Counts counts;
};

struct BucketAnalysis {
  std::vector<Bucket> buckets;
  // Fraction of sentences with more than one gold triplet.
  double multi_triplet_ratio = 0.0;
};

struct ScoreReport {
  Counts overall;
  std::array<Counts, 3> by_sentiment;  // POS, NEG, NEU
  BucketAnalysis buckets;
  std::size_t sentences = 0;
};

// Exact-match counts for one sentence: a prediction is correct when target
// span, opinion span and sentiment all agree with some gold triplet.
Counts match(const TripletSet& predicted, const TripletSet& gold);

// Micro-averaged scores over aligned sentence lists.
ScoreReport score(std::span<const TripletSet> predicted, std::span<const TripletSet> gold);

BucketAnalysis bucket_by_triplet_count(std::span<const TripletSet> predicted,
                                       std::span<const TripletSet> gold);

// Readable summary.
std::string format_report(const ScoreReport& r);
// `metric=value` lines.
std::string format_metrics(const ScoreReport& r);

}  // namespace aste::evaluate

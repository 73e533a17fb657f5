#pragma once

// Random sentence generators and brute-force label oracles used by tests.

#include <algorithm>
#include <string>
#include <vector>

#include "aste/corpus/types.hpp"
#include "aste/numerics/rng.hpp"

namespace aste::testing {

inline Span random_span(int n, num::Rng& rng, int max_len = 3) {
  const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  const int room = std::min(max_len, n - start);
  const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(room)));
  return Span{start, start + len - 1};
}

inline Sentiment random_sentiment(num::Rng& rng) {
  return static_cast<Sentiment>(1 + rng.below(3));
}

inline std::vector<std::string> numbered_tokens(int n) {
  std::vector<std::string> t;
  for (int i = 0; i < n; ++i) t.push_back("w" + std::to_string(i));
  return t;
}

// Any triplets whose own target and opinion are disjoint; spans of different
// triplets may overlap and cells may conflict. Needs n >= 2 for triplets.
inline Sentence random_sentence(num::Rng& rng, int max_n = 12, int max_triplets = 4) {
  Sentence s;
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n)));
  s.id = "synthetic";
  s.tokens = numbered_tokens(n);
  if (n < 2) return s;
  const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_triplets + 1)));
  for (int i = 0; i < k; ++i) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const Span t = random_span(n, rng);
      const Span o = random_span(n, rng);
      if (t.overlaps(o)) continue;
      s.triplets.push_back({t, random_sentiment(rng), o});
      break;
    }
  }
  return s;
}

// Triplets over a pool of pairwise-disjoint spans, so the sentence is
// conflict-free: targets and opinions may be shared between triplets (one-to-
// many), and no (target, opinion) pair repeats.
inline Sentence random_clean_sentence(num::Rng& rng, int max_n = 12, int max_triplets = 4) {
  Sentence s;
  const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n - 1)));
  s.id = "synthetic-clean";
  s.tokens = numbered_tokens(n);
  // Cut the sentence into consecutive pieces, each a span or a gap.
  std::vector<Span> pool;
  for (int i = 0; i < n;) {
    const int len = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(3, n - i)));
    if (rng.below(3) != 0) pool.push_back({i, i + len - 1});
    i += len;
  }
  if (pool.size() < 2) return s;
  // Each pool span gets one role.
  std::vector<Span> targets, opinions;
  for (const Span& sp : pool) (rng.below(2) ? targets : opinions).push_back(sp);
  if (targets.empty() || opinions.empty()) return s;
  const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_triplets + 1)));
  for (int i = 0; i < k; ++i) {
    const Span t = targets[rng.below(targets.size())];
    const Span o = opinions[rng.below(opinions.size())];
    const bool seen = std::any_of(s.triplets.begin(), s.triplets.end(), [&](const Triplet& x) {
      return x.target == t && x.opinion == o;
    });
    if (!seen) s.triplets.push_back({t, random_sentiment(rng), o});
  }
  return s;
}

// Cell-by-cell membership test against every triplet's C-set, later triplets
// overriding earlier ones.
inline SentimentTable brute_force_table(const Sentence& s) {
  const int n = static_cast<int>(s.size());
  SentimentTable table(s.size());
  for (int m = 0; m < n; ++m) {
    for (int c = 0; c < n; ++c) {
      TableLabel label = TableLabel::kNone;
      for (const Triplet& t : s.triplets) {
        const bool in_c = (t.target.contains(m) && t.opinion.contains(c)) ||
                          (t.opinion.contains(m) && t.target.contains(c));
        if (in_c) label = to_table_label(t.sentiment);
      }
      table.at(m, c) = label;
    }
  }
  return table;
}

}  // namespace aste::testing

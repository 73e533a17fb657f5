#include "aste/decode/decode.hpp"

#include <array>
#include <cmath>
#include <optional>

#include "aste/corpus/dataset.hpp"
#include "aste/errors.hpp"

namespace aste::decode {

std::vector<Tag> argmax_tags(const num::Tensor& seq_logits) {
  if (seq_logits.rank() != 2 || seq_logits.cols() != static_cast<std::size_t>(kNumTags)) {
    throw DimensionError("tag logits must be [N x 5], got " +
                         num::shape_string(seq_logits.shape()));
  }
  std::vector<Tag> tags(seq_logits.rows());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < seq_logits.cols(); ++k) {
      if (seq_logits.at(i, k) > seq_logits.at(i, best)) best = k;
    }
    tags[i] = static_cast<Tag>(best);
  }
  return tags;
}

SpanSet extract_spans(std::span<const Tag> tags) {
  SpanSet out;
  enum class Open { kNone, kTarget, kOpinion };
  Open open = Open::kNone;
  int start = 0;
  const auto close = [&](int end) {
    if (open == Open::kTarget) out.targets.push_back({start, end});
    if (open == Open::kOpinion) out.opinions.push_back({start, end});
    open = Open::kNone;
  };
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const Tag t = tags[static_cast<std::size_t>(i)];
    const Open kind = (t == Tag::kBTarget || t == Tag::kITarget)     ? Open::kTarget
                      : (t == Tag::kBOpinion || t == Tag::kIOpinion) ? Open::kOpinion
                                                                     : Open::kNone;
    const bool begins = t == Tag::kBTarget || t == Tag::kBOpinion;
    if (kind == Open::kNone) {
      close(i - 1);
    } else if (begins || kind != open) {
      close(i - 1);
      open = kind;
      start = i;
    }
  }
  close(static_cast<int>(tags.size()) - 1);
  return out;
}

num::Tensor table_probabilities(const num::Tensor& table_logits) {
  if (table_logits.rank() != 2 || table_logits.cols() != static_cast<std::size_t>(kNumTableLabels)) {
    throw DimensionError("table logits must be [N*N x 4], got " +
                         num::shape_string(table_logits.shape()));
  }
  num::Tensor probs(table_logits.shape());
  for (std::size_t r = 0; r < table_logits.rows(); ++r) {
    double mx = table_logits.at(r, 0);
    for (std::size_t k = 1; k < 4; ++k) mx = std::max(mx, table_logits.at(r, k));
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) total += probs.at(r, k) = std::exp(table_logits.at(r, k) - mx);
    for (std::size_t k = 0; k < 4; ++k) probs.at(r, k) /= total;
  }
  return probs;
}

TableLabel aggregate_sentiment(const num::Tensor& table_probs, std::size_t n, Span target,
                               Span opinion) {
  if (target.overlaps(opinion)) throw UsageError("target and opinion spans overlap");
  if (table_probs.rank() != 2 || table_probs.rows() != n * n || table_probs.cols() != 4) {
    throw DimensionError("table probabilities must be [N*N x 4]");
  }
  const int side = static_cast<int>(n);
  if (target.start < 0 || opinion.start < 0 || target.end >= side || opinion.end >= side) {
    throw UsageError("span outside the table");
  }
  std::array<double, 4> mass{};
  const auto add_cell = [&](int m, int k) {
    const std::size_t row = static_cast<std::size_t>(m) * n + static_cast<std::size_t>(k);
    for (std::size_t s = 0; s < 4; ++s) mass[s] += table_probs.at(row, s);
  };
  for (int m = target.start; m <= target.end; ++m) {
    for (int k = opinion.start; k <= opinion.end; ++k) {
      add_cell(m, k);
      add_cell(k, m);
    }
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < 4; ++s) {
    if (mass[s] > mass[best]) best = s;
  }
  return static_cast<TableLabel>(best);
}

Prediction decode_triplets(const num::Tensor& seq_logits, const num::Tensor& table_logits) {
  const std::vector<Tag> tags = argmax_tags(seq_logits);
  const std::size_t n = tags.size();
  if (table_logits.rows() != n * n) {
    throw DimensionError("table logits have " + std::to_string(table_logits.rows()) +
                         " rows for a sentence of " + std::to_string(n) + " tokens");
  }
  SpanSet spans = extract_spans(tags);
  Prediction p;
  p.targets = std::move(spans.targets);
  p.opinions = std::move(spans.opinions);
  if (p.targets.empty() || p.opinions.empty()) return p;
  const num::Tensor probs = table_probabilities(table_logits);
  for (const Span& t : p.targets) {
    for (const Span& o : p.opinions) {
      const TableLabel label = aggregate_sentiment(probs, n, t, o);
      if (label != TableLabel::kNone) p.triplets.push_back({t, static_cast<Sentiment>(label), o});
    }
  }
  return p;
}

Logits gold_logits(const Sentence& s) {
  const std::size_t n = s.size();
  Logits l{num::Tensor({n, kNumTags}, std::vector<double>(n * kNumTags, -20.0)),
           num::Tensor({n * n, kNumTableLabels}, std::vector<double>(n * n * kNumTableLabels, -20.0))};
  for (std::size_t i = 0; i < n; ++i) l.seq.at(i, static_cast<std::size_t>(s.gold_tags[i])) = 20.0;
  for (std::size_t c = 0; c < n * n; ++c) {
    l.table.at(c, static_cast<std::size_t>(s.gold_table.cells()[c])) = 20.0;
  }
  return l;
}

std::string format_prediction(const std::vector<std::string>& tokens, const Prediction& p) {
  return format_line(tokens, p.triplets);
}

}  // namespace aste::decode

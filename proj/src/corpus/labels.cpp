#include "aste/corpus/labels.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include "aste/errors.hpp"

namespace aste {

namespace {

enum class Role { kTarget, kOpinion };

struct RoleSpan {
  Span span;
  Role role;
  friend auto operator<=>(const RoleSpan&, const RoleSpan&) = default;
};

void check_bounds(const Sentence& s) {
  const int n = static_cast<int>(s.size());
  for (const Triplet& t : s.triplets) {
    for (const Span& sp : {t.target, t.opinion}) {
      if (sp.start < 0 || sp.start > sp.end || sp.end >= n) {
        throw DataError(s.id + ": span " + std::to_string(sp.start) + ".." +
                        std::to_string(sp.end) + " out of bounds for " + std::to_string(n) +
                        " tokens in triplet " + to_string(t));
      }
    }
  }
}

const Triplet* owner_of(const Sentence& s, const RoleSpan& rs) {
  for (const Triplet& t : s.triplets) {
    if ((rs.role == Role::kTarget ? t.target : t.opinion) == rs.span) return &t;
  }
  return nullptr;
}

}  // namespace

std::vector<Tag> make_bio_tags(const Sentence& s) {
  check_bounds(s);
  std::set<RoleSpan> spans;
  for (const Triplet& t : s.triplets) {
    spans.insert({t.target, Role::kTarget});
    spans.insert({t.opinion, Role::kOpinion});
  }
  const std::vector<RoleSpan> list(spans.begin(), spans.end());
  for (std::size_t i = 0; i < list.size(); ++i) {
    for (std::size_t j = i + 1; j < list.size(); ++j) {
      if (list[i].span.overlaps(list[j].span)) {
        throw DataError(s.id + ": overlapping spans in triplets " +
                        to_string(*owner_of(s, list[i])) + " and " +
                        to_string(*owner_of(s, list[j])));
      }
    }
  }
  std::vector<Tag> tags(s.size(), Tag::kO);
  for (const RoleSpan& rs : list) {
    const bool target = rs.role == Role::kTarget;
    tags[rs.span.start] = target ? Tag::kBTarget : Tag::kBOpinion;
    for (int i = rs.span.start + 1; i <= rs.span.end; ++i) {
      tags[i] = target ? Tag::kITarget : Tag::kIOpinion;
    }
  }
  return tags;
}

SentimentTable make_sentiment_table(const Sentence& s, std::vector<CellConflict>* conflicts) {
  check_bounds(s);
  SentimentTable table(s.size());
  auto assign = [&](int m, int n, Sentiment sentiment) {
    TableLabel& cell = table.at(m, n);
    const TableLabel label = to_table_label(sentiment);
    if (cell != TableLabel::kNone && cell != label && conflicts) {
      conflicts->push_back({static_cast<std::size_t>(m), static_cast<std::size_t>(n),
                            static_cast<Sentiment>(cell), sentiment});
    }
    cell = label;
  };
  for (const Triplet& t : s.triplets) {
    for (int m = t.target.start; m <= t.target.end; ++m) {
      for (int n = t.opinion.start; n <= t.opinion.end; ++n) {
        assign(m, n, t.sentiment);
        assign(n, m, t.sentiment);
      }
    }
  }
  return table;
}

std::optional<std::string> validation_error(const Sentence& s) {
  try {
    make_bio_tags(s);
    std::vector<CellConflict> conflicts;
    make_sentiment_table(s, &conflicts);
    if (!conflicts.empty()) {
      const CellConflict& c = conflicts.front();
      return s.id + ": conflicting sentiments at cell (" + std::to_string(c.row) + "," +
             std::to_string(c.col) + ")";
    }
  } catch (const DataError& e) {
    return std::string(e.what());
  }
  return std::nullopt;
}

void prepare_sentence(Sentence& s) {
  s.gold_tags = make_bio_tags(s);
  std::vector<CellConflict> conflicts;
  s.gold_table = make_sentiment_table(s, &conflicts);
  for (const CellConflict& c : conflicts) {
    std::clog << "warning: " << s.id << ": cell (" << c.row << "," << c.col << ") relabeled "
              << to_string(c.previous) << " -> " << to_string(c.winner) << "\n";
  }
}

LoadedSplit load_split(const std::filesystem::path& path, bool strict, std::size_t max_length) {
  LoadedSplit split;
  std::vector<Sentence> parsed = parse_dataset(path, max_length);
  split.total = parsed.size();
  for (Sentence& s : parsed) {
    if (auto reason = validation_error(s)) {
      if (strict) throw DataError(*reason);
      std::clog << "warning: skipping " << *reason << "\n";
      split.rejected.push_back(*reason);
      continue;
    }
    prepare_sentence(s);
    split.sentences.push_back(std::move(s));
  }
  return split;
}

}  // namespace aste

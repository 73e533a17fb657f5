#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aste/corpus/dataset.hpp"
#include "aste/corpus/types.hpp"

namespace aste {

// BIO tags for the distinct target and opinion spans of a sentence. A span
// shared by several triplets is tagged once. Throws DataError if two distinct
// spans overlap (including a span used both as target and as opinion).
std::vector<Tag> make_bio_tags(const Sentence& s);

// A cell claimed by two triplets with different sentiments.
struct CellConflict {
  std::size_t row = 0;
  std::size_t col = 0;
  Sentiment previous = Sentiment::kPos;
  Sentiment winner = Sentiment::kPos;
};

// Gold table: every cell of every triplet's C-set (target x opinion and the
// mirrored opinion x target block) gets the triplet's sentiment; all other
// cells are N/A. On conflicts the later triplet wins and the conflict is
// reported through `conflicts` when given.
SentimentTable make_sentiment_table(const Sentence& s,
                                    std::vector<CellConflict>* conflicts = nullptr);

// Reason the sentence cannot be used for gold-label construction (spans out of
// bounds, overlapping spans, or table conflicts), or nullopt if it is clean.
std::optional<std::string> validation_error(const Sentence& s);

// Fills gold_tags and gold_table. Conflicts are resolved as in
// make_sentiment_table and reported as warnings on std::clog.
void prepare_sentence(Sentence& s);

struct LoadedSplit {
  std::vector<Sentence> sentences;  // prepared, valid sentences
  std::vector<std::string> rejected;  // "id: reason" for skipped sentences
  std::size_t total = 0;              // lines parsed
};

// Parses and prepares a split. Sentences failing validation are skipped with
// a warning unless `strict` is set, in which case the first one throws.
LoadedSplit load_split(const std::filesystem::path& path, bool strict = false,
                       std::size_t max_length = kDefaultMaxSentenceLength);

}  // namespace aste

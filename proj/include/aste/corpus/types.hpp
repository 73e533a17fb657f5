#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aste {

// Inclusive token interval [start, end], 0-based.
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool contains(int i) const { return start <= i && i <= end; }
  bool overlaps(const Span& o) const { return start <= o.end && o.start <= end; }

  friend auto operator<=>(const Span&, const Span&) = default;
};

// Table labels, in the fixed order used for argmax tie-breaking.
enum class TableLabel : std::uint8_t { kNone = 0, kPos = 1, kNeg = 2, kNeu = 3 };
inline constexpr int kNumTableLabels = 4;

// Triplet polarity. Values coincide with the matching TableLabel.
enum class Sentiment : std::uint8_t { kPos = 1, kNeg = 2, kNeu = 3 };

inline TableLabel to_table_label(Sentiment s) { return static_cast<TableLabel>(s); }

// BIO tags, in the fixed order used for argmax tie-breaking.
enum class Tag : std::uint8_t { kO = 0, kBTarget = 1, kBOpinion = 2, kITarget = 3, kIOpinion = 4 };
inline constexpr int kNumTags = 5;

std::string_view to_string(TableLabel l);
std::string_view to_string(Sentiment s);
std::string_view to_string(Tag t);
// "POS" | "NEG" | "NEU"
std::optional<Sentiment> parse_sentiment(std::string_view text);

struct Triplet {
  Span target;
  Sentiment sentiment = Sentiment::kPos;
  Span opinion;

  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

std::string to_string(const Triplet& t);

// N x N grid of table labels, row-major.
class SentimentTable {
 public:
  SentimentTable() = default;
  explicit SentimentTable(std::size_t n) : n_(n), cells_(n * n, TableLabel::kNone) {}

  std::size_t size() const { return n_; }
  TableLabel at(std::size_t m, std::size_t n) const { return cells_[m * n_ + n]; }
  TableLabel& at(std::size_t m, std::size_t n) { return cells_[m * n_ + n]; }
  const std::vector<TableLabel>& cells() const { return cells_; }

  friend bool operator==(const SentimentTable&, const SentimentTable&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<TableLabel> cells_;
};

struct Sentence {
  // Origin for diagnostics, e.g. "test_triplets.txt:12".
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Triplet> triplets;
  // Filled by prepare_sentence().
  std::vector<Tag> gold_tags;
  SentimentTable gold_table;

  std::size_t size() const { return tokens.size(); }
};

}  // namespace aste

#include "aste/corpus/types.hpp"

namespace aste {

std::string_view to_string(TableLabel l) {
  switch (l) {
    case TableLabel::kNone: return "N/A";
    case TableLabel::kPos: return "POS";
    case TableLabel::kNeg: return "NEG";
    case TableLabel::kNeu: return "NEU";
  }
  return "?";
}

std::string_view to_string(Sentiment s) { return to_string(to_table_label(s)); }

std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::kO: return "O";
    case Tag::kBTarget: return "B-Target";
    case Tag::kBOpinion: return "B-Opinion";
    case Tag::kITarget: return "I-Target";
    case Tag::kIOpinion: return "I-Opinion";
  }
  return "?";
}

std::optional<Sentiment> parse_sentiment(std::string_view text) {
  if (text == "POS") return Sentiment::kPos;
  if (text == "NEG") return Sentiment::kNeg;
  if (text == "NEU") return Sentiment::kNeu;
  return std::nullopt;
}

std::string to_string(const Triplet& t) {
  return "(" + std::to_string(t.target.start) + ".." + std::to_string(t.target.end) + ", " +
         std::string(to_string(t.sentiment)) + ", " + std::to_string(t.opinion.start) + ".." +
         std::to_string(t.opinion.end) + ")";
}

}  // namespace aste

#include "aste/corpus/dataset.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "aste/errors.hpp"

namespace aste {

namespace {

constexpr std::string_view kSeparator = "####";

// Recursive-descent reader for the triplet list literal.
class TripletListReader {
 public:
  TripletListReader(std::string_view text, std::string_view where, std::size_t n_tokens)
      : text_(text), where_(where), n_tokens_(n_tokens) {}

  std::vector<Triplet> read() {
    std::vector<Triplet> out;
    expect('[');
    skip_space();
    if (peek() == ']') {
      ++pos_;
    } else {
      while (true) {
        out.push_back(read_triplet());
        skip_space();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(']');
        break;
      }
    }
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters after triplet list");
    return out;
  }

 private:
  Triplet read_triplet() {
    expect('(');
    const Span target = read_span("target");
    expect(',');
    const Span opinion = read_span("opinion");
    expect(',');
    const std::string label = read_quoted();
    skip_space();
    if (peek() == ',') ++pos_;  // tolerate a trailing comma inside the tuple
    expect(')');
    const auto sentiment = parse_sentiment(label);
    if (!sentiment) fail("unknown sentiment '" + label + "'");
    return Triplet{target, *sentiment, opinion};
  }

  Span read_span(std::string_view role) {
    expect('[');
    std::vector<long> idx;
    skip_space();
    if (peek() != ']') {
      while (true) {
        idx.push_back(read_int());
        skip_space();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        break;
      }
    }
    expect(']');
    if (idx.empty()) data_fail("empty " + std::string(role) + " index list");
    for (long i : idx) {
      if (i < 0 || static_cast<std::size_t>(i) >= n_tokens_) {
        data_fail(std::string(role) + " index " + std::to_string(i) + " out of range for " +
                  std::to_string(n_tokens_) + " tokens");
      }
    }
    for (std::size_t k = 1; k < idx.size(); ++k) {
      if (idx[k] != idx[k - 1] + 1) {
        data_fail("non-contiguous " + std::string(role) + " index list");
      }
    }
    return Span{static_cast<int>(idx.front()), static_cast<int>(idx.back())};
  }

  long read_int() {
    skip_space();
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    long v = 0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr == begin) fail("expected an integer");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }

  std::string read_quoted() {
    skip_space();
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected a quoted sentiment label");
    ++pos_;
    const std::size_t close = text_.find(quote, pos_);
    if (close == std::string_view::npos) fail("unterminated string");
    std::string s(text_.substr(pos_, close - pos_));
    pos_ = close + 1;
    return s;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void expect(char c) {
    skip_space();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(std::string(where_) + ": " + what + " at column " +
                     std::to_string(pos_ + 1) + " of triplet list");
  }
  [[noreturn]] void data_fail(const std::string& what) const {
    throw DataError(std::string(where_) + ": " + what);
  }

  std::string_view text_;
  std::string_view where_;
  std::size_t n_tokens_;
  std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view text, std::string_view where) {
  text = trim(text);
  if (text.empty()) throw ParseError(std::string(where) + ": empty sentence");
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (true) {
    const std::size_t space = text.find(' ', start);
    const std::string_view tok = text.substr(start, space - start);
    if (tok.empty()) {
      throw ParseError(std::string(where) + ": empty token at column " + std::to_string(start + 1));
    }
    tokens.emplace_back(tok);
    if (space == std::string_view::npos) break;
    start = space + 1;
  }
  return tokens;
}

Sentence parse_line(std::string_view line, std::string_view where, std::size_t max_length) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const std::size_t sep = line.find(kSeparator);
  if (sep == std::string_view::npos) {
    throw ParseError(std::string(where) + ": missing '####' separator");
  }
  Sentence s;
  s.id = std::string(where);
  s.tokens = split_tokens(line.substr(0, sep), where);
  if (s.tokens.size() > max_length) {
    throw DataError(std::string(where) + ": sentence has " + std::to_string(s.tokens.size()) +
                    " tokens, maximum is " + std::to_string(max_length));
  }
  TripletListReader reader(trim(line.substr(sep + kSeparator.size())), where, s.tokens.size());
  s.triplets = reader.read();
  return s;
}

std::vector<Sentence> parse_dataset(const std::filesystem::path& path, std::size_t max_length) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path.string());
  std::vector<Sentence> out;
  std::string line;
  std::size_t line_no = 0;
  const std::string name = path.filename().string();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    out.push_back(parse_line(line, name + ":" + std::to_string(line_no), max_length));
  }
  return out;
}

std::string format_line(const std::vector<std::string>& tokens,
                        const std::vector<Triplet>& triplets) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  out += kSeparator;
  out += '[';
  auto indices = [](const Span& s) {
    std::string r = "[";
    for (int i = s.start; i <= s.end; ++i) {
      if (i != s.start) r += ", ";
      r += std::to_string(i);
    }
    return r + "]";
  };
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    if (k) out += ", ";
    const Triplet& t = triplets[k];
    out += "(" + indices(t.target) + ", " + indices(t.opinion) + ", '" +
           std::string(to_string(t.sentiment)) + "')";
  }
  out += ']';
  return out;
}

}  // namespace aste

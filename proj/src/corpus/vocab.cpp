#include "aste/corpus/vocab.hpp"

#include <charconv>
#include <fstream>

#include "aste/errors.hpp"

namespace aste {

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

int Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

int Vocabulary::add(std::string_view token) {
  auto [it, inserted] = index_.emplace(std::string(token), static_cast<int>(tokens_.size()));
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

Vocabulary build_vocab(std::span<const Sentence> sentences) {
  Vocabulary v;
  for (const Sentence& s : sentences) {
    for (const std::string& tok : s.tokens) v.add(tok);
  }
  return v;
}

namespace {

bool parse_real(std::string_view field, double& out) {
  // from_chars does not accept a leading '+'.
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace

num::Tensor load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                            std::size_t d_w) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file " + path.string());
  num::Tensor table({vocab.size(), d_w});
  const std::string name = path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fields.clear();
    std::string_view rest = line;
    while (!rest.empty()) {
      const std::size_t space = rest.find(' ');
      if (space != 0) fields.push_back(rest.substr(0, space));
      if (space == std::string_view::npos) break;
      rest.remove_prefix(space + 1);
    }
    const std::string where = name + ":" + std::to_string(line_no);
    // Some published vector files contain tokens with embedded spaces; the
    // last d_w fields are always the vector.
    if (fields.size() < d_w + 1) {
      throw ParseError(where + ": expected " + std::to_string(d_w) + " values, found " +
                       std::to_string(fields.size() == 0 ? 0 : fields.size() - 1));
    }
    const std::size_t n_token_fields = fields.size() - d_w;
    double probe = 0.0;
    if (n_token_fields > 1 && parse_real(fields[n_token_fields - 1], probe)) {
      throw ParseError(where + ": expected " + std::to_string(d_w) + " values, found " +
                       std::to_string(fields.size() - 1));
    }
    std::string token(fields[0]);
    for (std::size_t k = 1; k < n_token_fields; ++k) {
      token += ' ';
      token += fields[k];
    }
    const int row = vocab.index(token);
    std::vector<double> values(d_w);
    for (std::size_t k = 0; k < d_w; ++k) {
      if (!parse_real(fields[n_token_fields + k], values[k])) {
        throw ParseError(where + ": invalid real '" + std::string(fields[n_token_fields + k]) +
                         "'");
      }
    }
    if (row == Vocabulary::kUnk || row == Vocabulary::kPad) continue;
    std::copy(values.begin(), values.end(), table.data() + static_cast<std::size_t>(row) * d_w);
  }
  return table;
}

}  // namespace aste

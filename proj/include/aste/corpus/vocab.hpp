#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aste/corpus/types.hpp"
#include "aste/numerics/tensor.hpp"

namespace aste {

// Token <-> index map. Index 0 is padding, 1 is unknown; real tokens start at
// 2 in order of first appearance.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  // Index of an existing token, or kUnk.
  int index(std::string_view token) const;
  // Adds if absent; returns the index either way.
  int add(std::string_view token);
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

Vocabulary build_vocab(std::span<const Sentence> sentences);

// [|V| x d_w] frozen embedding matrix. Each line of the file is a token
// followed by d_w reals. Rows of tokens found in the file are copied exactly;
// padding, unknown, and tokens missing from the file are zero rows.
num::Tensor load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                            std::size_t d_w);

}  // namespace aste

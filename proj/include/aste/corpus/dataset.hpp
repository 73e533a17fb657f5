#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "aste/corpus/types.hpp"

namespace aste {

// Longest accepted sentence; longer inputs are rejected, never truncated.
inline constexpr std::size_t kDefaultMaxSentenceLength = 120;

// One dataset line:
//   tok0 tok1 ... tokN-1####[([i, ...], [j, ...], 'POS'), ...]
// Target index list first, opinion list second; lists must be contiguous
// ascending runs. `where` prefixes error messages (e.g. "file:line").
Sentence parse_line(std::string_view line, std::string_view where,
                    std::size_t max_length = kDefaultMaxSentenceLength);

// Parses a whole file. Blank lines are skipped. Sentence ids are "file:line".
// Gold tags and tables are not built here.
std::vector<Sentence> parse_dataset(const std::filesystem::path& path,
                                    std::size_t max_length = kDefaultMaxSentenceLength);

// Splits a raw sentence on single spaces; rejects empty tokens.
std::vector<std::string> split_tokens(std::string_view text, std::string_view where);

// Inverse of parse_line: the same line format, with the triplets as given.
std::string format_line(const std::vector<std::string>& tokens,
                        const std::vector<Triplet>& triplets);

}  // namespace aste

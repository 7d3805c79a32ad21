#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace specfi {

// Lowercased alphanumeric tokens, split on everything else. UTF-8 aware for
// the Latin blocks (sufficient for the English/German corpora handled here);
// codepoints outside those blocks are kept as-is and treated as letters.
std::vector<std::string> tokenize(std::string_view text);

// Whitespace token count, the coarse word statistic used throughout.
std::size_t word_count(std::string_view text);

// Naive sentence split on ./!/? followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view text);

std::string to_lower(std::string_view text);

std::string trim(std::string_view s);

// True when `needle` occurs in `haystack` delimited by non-alphanumerics
// (word-boundary substring match on already-lowercased strings).
bool contains_word_boundary(std::string_view haystack, std::string_view needle);

}  // namespace specfi

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mhc {

/// Lowercased word tokens: runs of alphanumerics and apostrophes. Other
/// non-space ASCII characters become single-character punctuation tokens.
std::vector<std::string> tokenize_words(std::string_view text);

/// Same split as tokenize_words with punctuation dropped.
std::vector<std::string> content_words(std::string_view text);

bool is_punctuation_token(std::string_view token);

/// Built-in English stopword list.
const std::set<std::string>& default_stopwords();

/// One entry per line; blank lines and lines starting with '#' are ignored.
std::set<std::string> load_word_list(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace mhc

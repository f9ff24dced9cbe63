#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace affect::text {

/// Lowercases ASCII letters and folds Latin-1 / Latin Extended-A letters
/// to their unaccented ASCII base. Other non-ASCII code points become
/// spaces.
std::string ascii_fold_lower(std::string_view utf8);

/// Lowercased alphanumeric runs.
std::vector<std::string> tokenize_words(std::string_view text);

/// All unigrams and adjacent-pair bigrams (joined with '_') with counts.
std::map<std::string, int> tokenize_ngrams(std::string_view text);

/// Distinct n-grams of a text (binary presence).
std::set<std::string> ngram_set(std::string_view text);

}  // namespace affect::text

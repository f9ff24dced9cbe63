#include "affect/text/tokenize.hpp"

#include <cctype>

namespace affect::text {

namespace {

using namespace std::string_view_literals;

// Base letters for U+00C0..U+017F; '\0' marks a code point with no letter.
constexpr std::string_view kLatin1 =
    "aaaaaaaceeeeiiii"   // C0-CF (C6 AE -> a)
    "dnooooo\0ouuuuyts"  // D0-DF (D7 x sign, DE thorn, DF sharp s)
    "aaaaaaaceeeeiiii"   // E0-EF
    "dnooooo\0ouuuuyty"  // F0-FF (F7 division sign)
    "aaaaaaccccccccdd"   // 100-10F
    "ddeeeeeeeeeegggg"   // 110-11F
    "gggghhhhiiiiiiii"   // 120-12F
    "iiiijjkkklllllll"   // 130-13F
    "lllnnnnnnnnnoooo"   // 140-14F
    "oooorrrrrrssssss"   // 150-15F
    "ssttttttuuuuuuuu"   // 160-16F
    "uuuuwwyyyzzzzzzs"sv;  // 170-17F

static_assert(kLatin1.size() == 0x180 - 0xC0);

char fold(char32_t cp) {
  if (cp < 0x80) return char(std::tolower(int(cp)));
  if (cp >= 0xC0 && cp <= 0x17F) {
    const char c = kLatin1[cp - 0xC0];
    return c == '\0' ? ' ' : c;
  }
  return ' ';
}

}  // namespace

std::string ascii_fold_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    int len = 1;
    if (b < 0x80) cp = b;
    else if ((b >> 5) == 0x6) cp = b & 0x1F, len = 2;
    else if ((b >> 4) == 0xE) cp = b & 0x0F, len = 3;
    else if ((b >> 3) == 0x1E) cp = b & 0x07, len = 4;
    else cp = 0xFFFD;  // stray continuation or invalid lead byte
    bool valid = i + std::size_t(len) <= s.size();
    for (int k = 1; valid && k < len; ++k) {
      const auto c = static_cast<unsigned char>(s[i + std::size_t(k)]);
      if ((c >> 6) != 0x2) valid = false;
      else cp = (cp << 6) | (c & 0x3F);
    }
    if (!valid) cp = 0xFFFD, len = 1;
    out.push_back(fold(cp));
    i += std::size_t(len);
  }
  return out;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  const std::string folded = ascii_fold_lower(text);
  std::vector<std::string> words;
  std::string cur;
  for (char c : folded) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::map<std::string, int> tokenize_ngrams(std::string_view text) {
  const auto words = tokenize_words(text);
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    ++out[words[i]];
    if (i + 1 < words.size()) ++out[words[i] + "_" + words[i + 1]];
  }
  return out;
}

std::set<std::string> ngram_set(std::string_view text) {
  std::set<std::string> out;
  for (auto& [g, _] : tokenize_ngrams(text)) out.insert(g);
  return out;
}

}  // namespace affect::text

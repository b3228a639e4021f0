#include "mecrl/soundex.hpp"

#include <cctype>

#include "mecrl/types.hpp"

namespace mecrl {

namespace {

// 0 = vowel/y (separator), 7 = h/w (transparent), 1..6 = consonant classes.
int sound_class(char lower) {
  switch (lower) {
    case 'b': case 'f': case 'p': case 'v':
      return 1;
    case 'c': case 'g': case 'j': case 'k':
    case 'q': case 's': case 'x': case 'z':
      return 2;
    case 'd': case 't':
      return 3;
    case 'l':
      return 4;
    case 'm': case 'n':
      return 5;
    case 'r':
      return 6;
    case 'h': case 'w':
      return 7;
    default:
      return 0;  // a e i o u y
  }
}

}  // namespace

std::string soundex(std::string_view name) {
  std::string code;
  int prev = -1;  // class of the last coded or separating letter
  for (char ch : name) {
    const unsigned char uc = static_cast<unsigned char>(ch);
    if (!std::isalpha(uc)) continue;  // punctuation and digits are transparent
    const char lower = static_cast<char>(std::tolower(uc));
    const int cls = sound_class(lower);
    if (code.empty()) {
      code.push_back(static_cast<char>(std::toupper(uc)));
      prev = cls;
      continue;
    }
    if (cls == 7) continue;  // h/w: invisible, previous class stays armed
    if (cls == 0) {
      prev = 0;  // vowel: separates, so a repeated class codes again
      continue;
    }
    if (cls != prev) code.push_back(static_cast<char>('0' + cls));
    prev = cls;
    if (code.size() == 4) break;
  }
  if (code.empty()) {
    throw UsageError("soundex: input contains no alphabetic character");
  }
  code.resize(4, '0');
  return code;
}

}  // namespace mecrl

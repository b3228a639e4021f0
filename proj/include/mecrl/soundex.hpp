#pragma once

#include <string>
#include <string_view>

namespace mecrl {

// American Soundex, 4-character code (letter + 3 digits, zero-padded):
// the first letter is retained; remaining letters map to digit classes
// b/f/p/v=1, c/g/j/k/q/s/x/z=2, d/t=3, l=4, m/n=5, r=6; vowels and y act as
// separators (a repeated class across a vowel is coded again); h and w are
// transparent (a repeated class across h/w collapses); adjacent duplicates
// collapse, including against the first letter's own class.
// Non-ASCII-alphabetic characters are ignored. Throws UsageError if the
// input contains no alphabetic character.
std::string soundex(std::string_view name);

}  // namespace mecrl

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace docparse::latex {

enum class TokenKind {
  Command,      // backslash + letter run, or backslash + one non-letter
  GroupOpen,    // {
  GroupClose,   // }
  Superscript,  // ^
  Subscript,    // _
  Character,    // any other single code point
  Whitespace,   // run of blanks, tabs and line breaks
  Comment,      // % up to (not including) the line break
};

const char* to_string(TokenKind kind);

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t position;  // byte offset in the source

  bool is_letter_command() const noexcept;
};

/// Lossless lexer: concatenating the token texts reproduces `source`.
std::vector<Token> tokenize(std::string_view source);

}  // namespace docparse::latex

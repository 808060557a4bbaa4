#include "docparse/latex_lexer.hpp"

namespace docparse::latex {

namespace {

bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Byte length of the UTF-8 code point starting at s[i]; malformed sequences
// count as one byte.
std::size_t code_point_length(std::string_view s, std::size_t i) {
  const auto lead = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  if (lead >= 0xF0 && lead <= 0xF4) len = 4;
  else if (lead >= 0xE0) len = 3;
  else if (lead >= 0xC2 && lead <= 0xDF) len = 2;
  if (len == 1 || i + len > s.size()) return 1;
  for (std::size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 1;
  }
  return len;
}

}  // namespace

const char* to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Command: return "command";
    case TokenKind::GroupOpen: return "group-open";
    case TokenKind::GroupClose: return "group-close";
    case TokenKind::Superscript: return "superscript";
    case TokenKind::Subscript: return "subscript";
    case TokenKind::Character: return "character";
    case TokenKind::Whitespace: return "whitespace";
    case TokenKind::Comment: return "comment";
  }
  return "unknown";
}

bool Token::is_letter_command() const noexcept {
  return kind == TokenKind::Command && text.size() > 1 && is_ascii_letter(text[1]);
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto emit = [&](TokenKind kind, std::size_t len) {
    out.push_back({kind, std::string(s.substr(i, len)), i});
    i += len;
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\\') {
      if (i + 1 >= s.size()) {
        emit(TokenKind::Character, 1);
      } else if (is_ascii_letter(s[i + 1])) {
        std::size_t j = i + 1;
        while (j < s.size() && is_ascii_letter(s[j])) ++j;
        emit(TokenKind::Command, j - i);
      } else {
        emit(TokenKind::Command, 1 + code_point_length(s, i + 1));
      }
    } else if (c == '{') {
      emit(TokenKind::GroupOpen, 1);
    } else if (c == '}') {
      emit(TokenKind::GroupClose, 1);
    } else if (c == '^') {
      emit(TokenKind::Superscript, 1);
    } else if (c == '_') {
      emit(TokenKind::Subscript, 1);
    } else if (c == '%') {
      std::size_t j = i;
      while (j < s.size() && s[j] != '\n') ++j;
      emit(TokenKind::Comment, j - i);
    } else if (is_blank(c)) {
      std::size_t j = i;
      while (j < s.size() && is_blank(s[j])) ++j;
      emit(TokenKind::Whitespace, j - i);
    } else {
      emit(TokenKind::Character, code_point_length(s, i));
    }
  }
  return out;
}

}  // namespace docparse::latex

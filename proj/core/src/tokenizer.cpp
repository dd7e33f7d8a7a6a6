#include <array>
#include <cctype>
#include <unordered_map>

#include "retype/hash.hpp"
#include "retype/ingest.hpp"

namespace retype {
namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

constexpr std::array<std::string_view, 3> kPunct3 = {">>=", "<<=", "..."};
constexpr std::array<std::string_view, 21> kPunct2 = {
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "*=", "/=", "%=", "+=", "-=", "&=", "^=", "|=", "::", "##"};

// Copies a quoted literal, escaping '@' so no ordinary token can contain the
// placeholder sentinel.
std::size_t take_quoted(std::string_view code, std::size_t i, std::string& out) {
  const char quote = code[i];
  out += quote;
  ++i;
  while (i < code.size()) {
    const char c = code[i];
    if (c == '\\' && i + 1 < code.size()) {
      out += c;
      out += code[i + 1];
      i += 2;
      continue;
    }
    if (c == '\n') break;  // unterminated: stop at end of line
    ++i;
    if (c == '@') {
      out += "\\x40";
      continue;
    }
    out += c;
    if (c == quote) break;
  }
  return i;
}

}  // namespace

std::vector<std::string> lex_c(std::string_view code) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = code.size();
  while (i < n) {
    const char c = code[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && code[i + 1] == '/') {
      while (i < n && code[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && code[i + 1] == '*') {
      auto end = code.find("*/", i + 2);
      i = end == std::string_view::npos ? n : end + 2;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && ident_char(code[j])) ++j;
      out.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(code[i + 1])))) {
      std::size_t j = i + 1;
      while (j < n) {
        const char d = code[j];
        if (ident_char(d) || d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') &&
                   (code[j - 1] == 'e' || code[j - 1] == 'E' || code[j - 1] == 'p' ||
                    code[j - 1] == 'P') &&
                   !(code[i] == '0' && j > i + 1 && (code[i + 1] == 'x' || code[i + 1] == 'X') &&
                     (code[j - 1] == 'e' || code[j - 1] == 'E'))) {
          ++j;  // exponent sign (not after a hex digit 'e')
        } else {
          break;
        }
      }
      out.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::string lit;
      i = take_quoted(code, i, lit);
      out.push_back(std::move(lit));
      continue;
    }
    bool matched = false;
    for (auto p : kPunct3) {
      if (code.substr(i, 3) == p) {
        out.emplace_back(p);
        i += 3;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    for (auto p : kPunct2) {
      if (code.substr(i, 2) == p) {
        out.emplace_back(p);
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (static_cast<unsigned char>(c) >= 0x80) {
      // Keep a UTF-8 sequence together.
      std::size_t j = i + 1;
      while (j < n && (static_cast<unsigned char>(code[j]) & 0xc0) == 0x80) ++j;
      out.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    if (c == '@') {
      out.emplace_back("\\x40");
      ++i;
      continue;
    }
    out.emplace_back(1, c);
    ++i;
  }
  return out;
}

TokenSequence canonicalize_tokens(std::string_view raw_code,
                                  std::span<const VariableRecord> variables) {
  std::unordered_map<std::string_view, std::size_t> by_name;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    by_name.emplace(variables[i].decomp_name, i);
  }
  TokenSequence seq;
  for (auto& text : lex_c(raw_code)) {
    Token t;
    if (!text.empty() && ident_start(text.front())) {
      if (auto it = by_name.find(text); it != by_name.end()) t.variable = it->second;
    }
    t.text = std::move(text);
    seq.tokens.push_back(std::move(t));
  }
  return seq;
}

std::uint64_t body_fingerprint(const TokenSequence& t, std::string_view self_name) {
  Fnv1a64 h;
  for (const auto& tok : t.tokens) {
    if (tok.is_placeholder()) {
      h.update(kPlaceholderSentinel);
    } else if (!self_name.empty() && tok.text == self_name) {
      h.update(kSelfSentinel);
    } else {
      h.update(tok.text);
    }
    h.update_byte(0);
  }
  return h.digest();
}

std::size_t TokenSequence::placeholder_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tokens) n += t.is_placeholder();
  return n;
}

std::vector<std::size_t> TokenSequence::positions_of(std::size_t variable) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].variable == variable) out.push_back(i);
  }
  return out;
}

}  // namespace retype

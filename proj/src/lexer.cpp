#include <array>
#include <cctype>
#include <limits>

#include "tdforge/frontend.hpp"

namespace tdforge {

namespace {

constexpr std::array<std::string_view, 14> kKeywords = {
    "typedef", "struct", "casetype", "switch", "case", "enum", "unit",
    "UINT8", "UINT16", "UINT16BE", "UINT32", "UINT32BE", "UINT64", "UINT64BE",
};

// Reserved in full 3D but not part of this subset's grammar.
constexpr std::array<std::string_view, 16> kReservedOnly = {
    "type",   "default", "entrypoint", "output", "mutable", "where",  "requires", "sizeof",
    "return", "true",    "false",      "this",   "extern",  "module", "aligned",  "const",
};

// Tried before single-character punctuators (maximal munch).
constexpr std::array<std::string_view, 8> kMultiPunct = {
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
};

class Lexer {
 public:
  Lexer(std::string_view text, std::vector<Diagnostic>& diags) : text_(text), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      if (!skip_space_and_comments()) return out;
      if (at_end()) break;
      SourcePos start = pos_;
      char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        out.push_back(word(start));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        auto tok = number(start);
        if (!tok) return out;
        out.push_back(*tok);
      } else if (c == ':' && (starts_with(":consume-all") || starts_with(":byte-size"))) {
        bool all = starts_with(":consume-all");
        std::string_view lexeme = all ? ":consume-all" : ":byte-size";
        advance(lexeme.size());
        out.push_back(Token{all ? TokenKind::kConsumeAll : TokenKind::kByteSize,
                            std::string(lexeme), 0, {start, pos_}});
      } else {
        std::string p;
        for (auto m : kMultiPunct) {
          if (starts_with(m)) {
            p = m;
            break;
          }
        }
        if (p.empty()) {
          static constexpr std::string_view kSingle = "{}()[];,:=+-*&|^<>!";
          if (kSingle.find(c) == std::string_view::npos) {
            advance(1);
            diags_.push_back({std::string(diag::kBadCharacter),
                              "unexpected character '" + std::string(1, c) + "'", {start, pos_}});
            return out;
          }
          p = std::string(1, c);
        }
        advance(p.size());
        out.push_back(Token{TokenKind::kPunct, p, 0, {start, pos_}});
      }
    }
    out.push_back(Token{TokenKind::kEnd, "", 0, {pos_, pos_}});
    return out;
  }

 private:
  bool at_end() const { return pos_.offset >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_.offset + ahead < text_.size() ? text_[pos_.offset + ahead] : '\0';
  }
  bool starts_with(std::string_view s) const { return text_.substr(pos_.offset).starts_with(s); }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && !at_end(); ++i) {
      if (text_[pos_.offset] == '\n') {
        ++pos_.line;
        pos_.column = 1;
      } else {
        ++pos_.column;
      }
      ++pos_.offset;
    }
  }

  bool skip_space_and_comments() {
    while (!at_end()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
      } else if (starts_with("//")) {
        while (!at_end() && peek() != '\n') advance(1);
      } else if (starts_with("/*")) {
        SourcePos start = pos_;
        advance(2);
        while (!at_end() && !starts_with("*/")) advance(1);
        if (at_end()) {
          diags_.push_back({std::string(diag::kUnterminated), "unterminated comment", {start, pos_}});
          return false;
        }
        advance(2);
      } else {
        break;
      }
    }
    return true;
  }

  Token word(SourcePos start) {
    std::size_t b = pos_.offset;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      advance(1);
    }
    std::string w(text_.substr(b, pos_.offset - b));
    bool kw = false;
    for (auto k : kKeywords) kw = kw || k == w;
    return Token{kw ? TokenKind::kKeyword : TokenKind::kIdent, w, 0, {start, pos_}};
  }

  std::optional<Token> number(SourcePos start) {
    std::size_t b = pos_.offset;
    BigInt v = 0;
    bool hex = peek() == '0' && (peek(1) == 'x' || peek(1) == 'X');
    if (hex) {
      advance(2);
      if (!std::isxdigit(static_cast<unsigned char>(peek()))) {
        diags_.push_back({std::string(diag::kBadLiteral), "malformed hex literal", {start, pos_}});
        return std::nullopt;
      }
      while (std::isxdigit(static_cast<unsigned char>(peek()))) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(peek())));
        v = v * 16 + (std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : c - 'a' + 10);
        advance(1);
      }
    } else {
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + (peek() - '0');
        advance(1);
      }
    }
    // Integer suffixes such as `uy` are not part of the subset.
    if (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_') {
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance(1);
      diags_.push_back({std::string(diag::kBadLiteral), "malformed integer literal", {start, pos_}});
      return std::nullopt;
    }
    if (v > std::numeric_limits<std::uint64_t>::max()) {
      diags_.push_back({std::string(diag::kBadLiteral), "integer literal exceeds 2^64-1",
                        {start, pos_}});
      return std::nullopt;
    }
    return Token{TokenKind::kInt, std::string(text_.substr(b, pos_.offset - b)), v,
                 {start, pos_}};
  }

  std::string_view text_;
  std::vector<Diagnostic>& diags_;
  SourcePos pos_;
};

}  // namespace

bool is_reserved_word(std::string_view word) {
  for (auto k : kKeywords) {
    if (k == word) return true;
  }
  for (auto k : kReservedOnly) {
    if (k == word) return true;
  }
  return false;
}

std::vector<Token> tokenize(std::string_view text, std::vector<Diagnostic>& diags) {
  return Lexer(text, diags).run();
}

}  // namespace tdforge

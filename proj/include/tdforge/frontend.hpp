#pragma once

// Lexing, parsing and typechecking of `.3d` source text.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tdforge/ast.hpp"
#include "tdforge/diagnostics.hpp"

namespace tdforge {

enum class TokenKind {
  kEnd,
  kIdent,
  kKeyword,
  kInt,
  kPunct,
  kConsumeAll,   // `:consume-all`
  kByteSize,     // `:byte-size`
};

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string text;
  BigInt value;   // kInt
  SourceSpan span;
};

/// Words that may not be used as identifiers.
bool is_reserved_word(std::string_view word);

/// Tokenizes `text`. On a lexical error the token list ends at the error and
/// `diags` receives one entry.
std::vector<Token> tokenize(std::string_view text, std::vector<Diagnostic>& diags);

/// Parse result: a Spec whose references are not yet resolved, or diagnostics.
using ParseResult = std::variant<Spec, std::vector<Diagnostic>>;

/// Parses source text. The entry is the last typedef unless `entry` is given.
ParseResult parse_spec(std::string_view text, std::optional<std::string> entry = std::nullopt);

/// Resolves and checks a parsed Spec. Returns all type errors found.
std::vector<Diagnostic> typecheck(const Spec& spec);

/// parse_spec followed by typecheck.
ParseResult check(std::string_view text, std::optional<std::string> entry = std::nullopt);

/// Canonical source text for a Spec; `check(print_spec(s))` reproduces `s`.
std::string print_spec(const Spec& spec);
std::string print_expr(const Expr& e);

}  // namespace tdforge

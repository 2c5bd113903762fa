#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tdforge/ast.hpp"

namespace tdforge {

// Stable diagnostic codes. Golden tests and downstream tooling match on
// these strings; never renumber.
namespace diag {
inline constexpr std::string_view kExpectedTypedef = "SYN001";
inline constexpr std::string_view kUnexpectedToken = "SYN002";
inline constexpr std::string_view kUnterminated = "SYN003";
inline constexpr std::string_view kReservedKeyword = "SYN004";
inline constexpr std::string_view kBadLiteral = "SYN005";
inline constexpr std::string_view kBadCharacter = "SYN006";

inline constexpr std::string_view kUnresolvedType = "TYP001";
inline constexpr std::string_view kUnresolvedIdent = "TYP002";
inline constexpr std::string_view kDuplicate = "TYP003";
inline constexpr std::string_view kBitfieldFill = "TYP004";
inline constexpr std::string_view kRecursive = "TYP005";
inline constexpr std::string_view kConsumeAllTail = "TYP006";
inline constexpr std::string_view kScrutineeNotParam = "TYP007";
inline constexpr std::string_view kTypeMismatch = "TYP008";
inline constexpr std::string_view kDuplicateCase = "TYP009";
inline constexpr std::string_view kArity = "TYP010";
inline constexpr std::string_view kEntry = "TYP011";
inline constexpr std::string_view kArrayElement = "TYP012";
inline constexpr std::string_view kBitwidth = "TYP013";
inline constexpr std::string_view kEnumRange = "TYP014";
inline constexpr std::string_view kConstraintTarget = "TYP015";
inline constexpr std::string_view kShiftAmount = "TYP016";
}  // namespace diag

struct Diagnostic {
  std::string code;
  std::string message;
  SourceSpan span;
  // Severity is always "error" in this subset.
};

/// `file:line:col: CODE message`
std::string format_diagnostic(const Diagnostic& d, std::string_view file);
/// One JSON object per diagnostic, as an array.
std::string diagnostics_to_json(const std::vector<Diagnostic>& diags, std::string_view file);

}  // namespace tdforge

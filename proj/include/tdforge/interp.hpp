#pragma once

// Reference executable semantics: the ground-truth acceptance oracle.

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tdforge/ast.hpp"

namespace tdforge {

enum class AcceptMode { kStrict, kPrefix };

std::string_view to_string(AcceptMode mode);

enum class FailureReason {
  kInsufficientInput,
  kConstraintViolated,
  kNoCaseMatched,
  kEnumOutOfRange,
  kTrailingBytes,
};

std::string_view to_string(FailureReason reason);

/// Scalar field values by qualified path (`payload.case2.MaxSegSize`), in
/// parse order. Array fields bind their byte length.
using Bindings = std::vector<std::pair<std::string, BigInt>>;

struct ParseSuccess {
  std::size_t consumed = 0;
  Bindings bindings;

  friend bool operator==(const ParseSuccess&, const ParseSuccess&) = default;
};

struct ParseFailure {
  FailureReason reason = FailureReason::kInsufficientInput;
  std::string where;   // qualified field name, or casetype name for kNoCaseMatched
  std::size_t offset = 0;

  friend bool operator==(const ParseFailure&, const ParseFailure&) = default;
};

class ParseOutcome {
 public:
  ParseOutcome(ParseSuccess s) : v_(std::move(s)) {}
  ParseOutcome(ParseFailure f) : v_(std::move(f)) {}

  bool succeeded() const { return std::holds_alternative<ParseSuccess>(v_); }
  const ParseSuccess& success() const { return std::get<ParseSuccess>(v_); }
  const ParseFailure& failure() const { return std::get<ParseFailure>(v_); }
  const BigInt* binding(std::string_view path) const;

  friend bool operator==(const ParseOutcome&, const ParseOutcome&) = default;

 private:
  std::variant<ParseSuccess, ParseFailure> v_;
};

/// Human-readable one-line summary, e.g. `Success consumed=2 first=43 second=0`.
std::string describe(const ParseOutcome& outcome);

/// Parses `type_name` instantiated with `args` from `input` starting at `pos`.
ParseOutcome parse_type(const Spec& spec, std::string_view type_name, std::span<const BigInt> args,
                        std::span<const std::uint8_t> input, std::size_t pos = 0);

struct Validation {
  bool accepted = false;
  ParseOutcome outcome;
};

/// Runs the entry type. Strict mode reports leftover input as kTrailingBytes.
Validation validate(const Spec& spec, std::span<const std::uint8_t> input,
                    AcceptMode mode = AcceptMode::kStrict);

}  // namespace tdforge

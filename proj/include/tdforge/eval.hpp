#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "tdforge/ast.hpp"

namespace tdforge {

/// Result of evaluating an expression: an unbounded non-negative integer or a boolean.
class Value {
 public:
  static Value integer(BigInt n) { return Value(std::move(n)); }
  static Value boolean(bool b) { return Value(b); }

  bool is_int() const { return std::holds_alternative<BigInt>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  const BigInt& as_int() const { return std::get<BigInt>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }

  friend bool operator==(const Value&, const Value&) = default;

 private:
  explicit Value(BigInt n) : v_(std::move(n)) {}
  explicit Value(bool b) : v_(b) {}
  std::variant<BigInt, bool> v_;
};

enum class EvalErrorKind {
  kNegativeResult,      // subtraction underflow
  kUnboundIdentifier,   // only reachable on unchecked input
  kBitwiseRange,        // &, |, ^ operand at or above 2^64
  kTypeMismatch,        // only reachable on unchecked input
};

struct EvalError {
  EvalErrorKind kind;
  std::string detail;
};

using EvalResult = std::variant<Value, EvalError>;

inline bool ok(const EvalResult& r) { return std::holds_alternative<Value>(r); }

/// Identifier bindings along one parse path. Lookups fall back to the
/// global enum constants when a name is not bound locally.
class Env {
 public:
  Env() = default;
  explicit Env(const std::map<std::string, BigInt, std::less<>>* globals) : globals_(globals) {}

  /// Binds `name`; a second binding of the same name is a logic error.
  void bind(const std::string& name, BigInt value);
  const BigInt* lookup(std::string_view name) const;
  const std::map<std::string, BigInt, std::less<>>& locals() const { return locals_; }

 private:
  std::map<std::string, BigInt, std::less<>> locals_;
  const std::map<std::string, BigInt, std::less<>>* globals_ = nullptr;
};

/// Width of the operand domain for bitwise operators.
inline constexpr int kBitwiseWidth = 64;
/// Largest accepted constant shift amount.
inline constexpr int kMaxShift = 1024;

EvalResult eval_expr(const Env& env, const Expr& e);

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Decodes an unsigned integer; `bytes.size()` must equal the kind's byte width.
BigInt decode_int(std::span<const std::uint8_t> bytes, IntKind kind);

}  // namespace tdforge

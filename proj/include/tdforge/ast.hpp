#pragma once

// Abstract syntax for the format-description subset: integer kinds,
// expressions, fields and type definitions, and the checked Spec.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace tdforge {

using BigInt = boost::multiprecision::cpp_int;
using Bytes = std::vector<std::uint8_t>;

struct SourcePos {
  std::size_t offset = 0;
  int line = 1;
  int column = 1;
};

struct SourceSpan {
  SourcePos begin;
  SourcePos end;
};

enum class Endian { kBig, kLittle };

/// Unsigned integer encoding. 8-bit kinds are always canonicalized to big.
struct IntKind {
  int bits = 8;
  Endian endian = Endian::kBig;

  static IntKind make(int bits, Endian endian);
  int bytes() const { return bits / 8; }
  /// Surface keyword, e.g. "UINT16BE".
  std::string keyword() const;
  BigInt max_value() const;

  friend bool operator==(const IntKind&, const IntKind&) = default;
};

std::optional<IntKind> int_kind_from_keyword(std::string_view word);

enum class BinOp {
  kAdd, kSub, kMul, kShl, kShr, kBitAnd, kBitOr, kBitXor,
  kLt, kLe, kGt, kGe, kEq, kNe, kAnd, kOr,
};

std::string_view binop_symbol(BinOp op);

struct Expr {
  enum class Kind { kLiteral, kIdent, kNot, kBinary };

  Kind kind = Kind::kLiteral;
  BigInt value;                 // kLiteral
  std::string name;             // kIdent
  BinOp op = BinOp::kAdd;       // kBinary
  std::vector<Expr> operands;   // kNot: 1, kBinary: 2
  SourceSpan span;

  static Expr literal(BigInt v, SourceSpan span = {});
  static Expr ident(std::string name, SourceSpan span = {});
  static Expr negate(Expr e, SourceSpan span = {});
  static Expr binary(BinOp op, Expr lhs, Expr rhs, SourceSpan span = {});
};

struct TypeRef {
  enum class Kind { kInt, kUnit, kNamed };

  Kind kind = Kind::kInt;
  IntKind int_kind;            // kInt
  std::string name;            // kNamed: struct, casetype, enum or unit alias
  std::vector<Expr> args;      // kNamed instantiation arguments
  SourceSpan span;
};

enum class ArrayForm { kNone, kFixedBytes, kByteSize, kConsumeAll };

struct FieldDecl {
  std::string name;
  TypeRef type;
  std::optional<int> bitwidth;
  ArrayForm array = ArrayForm::kNone;
  std::optional<Expr> array_size;   // kFixedBytes (literal) and kByteSize
  std::optional<Expr> constraint;
  SourceSpan span;
};

struct Param {
  std::string name;
  IntKind kind;
  SourceSpan span;
};

struct StructBody {
  std::vector<FieldDecl> fields;
};

struct CaseArm {
  BigInt tag;
  FieldDecl field;
  SourceSpan span;
};

struct CasetypeBody {
  Expr scrutinee;
  std::vector<CaseArm> cases;
};

struct EnumConstant {
  std::string name;
  BigInt value;
  SourceSpan span;
};

struct EnumBody {
  IntKind underlying;
  std::vector<EnumConstant> constants;
};

struct UnitBody {};

struct TypeDef {
  std::string name;
  std::string tag;   // optional `_name` before the body; informational only
  std::vector<Param> params;
  std::variant<StructBody, CasetypeBody, EnumBody, UnitBody> body;
  SourceSpan span;

  bool is_struct() const { return std::holds_alternative<StructBody>(body); }
  bool is_casetype() const { return std::holds_alternative<CasetypeBody>(body); }
  bool is_enum() const { return std::holds_alternative<EnumBody>(body); }
  bool is_unit() const { return std::holds_alternative<UnitBody>(body); }
};

/// A collection of type definitions with one entry point.
class Spec {
 public:
  Spec() = default;
  Spec(std::vector<TypeDef> defs, std::string entry);

  const std::vector<TypeDef>& defs() const { return defs_; }
  const std::string& entry() const { return entry_; }
  void set_entry(std::string entry) { entry_ = std::move(entry); }

  const TypeDef* find(std::string_view name) const;
  const TypeDef& entry_def() const;
  std::optional<BigInt> enum_constant(std::string_view name) const;
  const std::map<std::string, BigInt, std::less<>>& enum_constants() const {
    return constants_;
  }

 private:
  void reindex();

  std::vector<TypeDef> defs_;
  std::string entry_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<std::string, BigInt, std::less<>> constants_;
};

/// A run of fields read together: either one ordinary field, or a set of
/// consecutive bitfields that exactly fill one container integer (filled
/// MSB-first in declaration order).
struct FieldGroup {
  std::size_t first = 0;
  std::size_t count = 1;
  bool bitfields = false;
};

/// Splits a checked field list into read groups.
std::vector<FieldGroup> group_fields(const std::vector<FieldDecl>& fields);

// Structural equality ignoring source spans.
bool same_structure(const Expr& a, const Expr& b);
bool same_structure(const FieldDecl& a, const FieldDecl& b);
bool same_structure(const TypeDef& a, const TypeDef& b);
bool same_structure(const Spec& a, const Spec& b);

/// Returns one message per violated data-model invariant; empty when the
/// Spec is well formed. Used to audit frontend output.
std::vector<std::string> invariant_violations(const Spec& spec);

}  // namespace tdforge

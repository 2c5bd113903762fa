#include "tdforge/eval.hpp"

namespace tdforge {

void Env::bind(const std::string& name, BigInt value) {
  auto [it, inserted] = locals_.emplace(name, std::move(value));
  if (!inserted) throw std::logic_error("identifier bound twice: " + name);
}

const BigInt* Env::lookup(std::string_view name) const {
  if (auto it = locals_.find(name); it != locals_.end()) return &it->second;
  if (globals_ != nullptr) {
    if (auto it = globals_->find(name); it != globals_->end()) return &it->second;
  }
  return nullptr;
}

namespace {

EvalResult mismatch(const char* what) {
  return EvalError{EvalErrorKind::kTypeMismatch, what};
}

EvalResult eval_binary(const Env& env, const Expr& e) {
  EvalResult lhs = eval_expr(env, e.operands[0]);
  if (!ok(lhs)) return lhs;
  const Value& a = std::get<Value>(lhs);

  // Logical operators short-circuit like C.
  if (e.op == BinOp::kAnd || e.op == BinOp::kOr) {
    if (!a.is_bool()) return mismatch("logical operand is not boolean");
    if (e.op == BinOp::kAnd && !a.as_bool()) return Value::boolean(false);
    if (e.op == BinOp::kOr && a.as_bool()) return Value::boolean(true);
    EvalResult rhs = eval_expr(env, e.operands[1]);
    if (!ok(rhs)) return rhs;
    const Value& b = std::get<Value>(rhs);
    if (!b.is_bool()) return mismatch("logical operand is not boolean");
    return b;
  }

  EvalResult rhs = eval_expr(env, e.operands[1]);
  if (!ok(rhs)) return rhs;
  const Value& b = std::get<Value>(rhs);

  if (e.op == BinOp::kEq || e.op == BinOp::kNe) {
    if (a.is_bool() != b.is_bool()) return mismatch("comparison of boolean with integer");
    bool eq = a == b;
    return Value::boolean(e.op == BinOp::kEq ? eq : !eq);
  }
  if (!a.is_int() || !b.is_int()) return mismatch("arithmetic operand is not an integer");
  const BigInt& x = a.as_int();
  const BigInt& y = b.as_int();

  switch (e.op) {
    case BinOp::kAdd: return Value::integer(x + y);
    case BinOp::kSub:
      if (y > x) return EvalError{EvalErrorKind::kNegativeResult, "subtraction underflow"};
      return Value::integer(x - y);
    case BinOp::kMul: return Value::integer(x * y);
    case BinOp::kShl:
    case BinOp::kShr: {
      if (y > kMaxShift) return mismatch("shift amount too large");
      unsigned k = y.convert_to<unsigned>();
      return Value::integer(e.op == BinOp::kShl ? BigInt(x << k) : BigInt(x >> k));
    }
    case BinOp::kBitAnd:
    case BinOp::kBitOr:
    case BinOp::kBitXor: {
      BigInt limit = BigInt(1) << kBitwiseWidth;
      if (x >= limit || y >= limit) {
        return EvalError{EvalErrorKind::kBitwiseRange, "bitwise operand out of range"};
      }
      if (e.op == BinOp::kBitAnd) return Value::integer(x & y);
      if (e.op == BinOp::kBitOr) return Value::integer(x | y);
      return Value::integer(x ^ y);
    }
    case BinOp::kLt: return Value::boolean(x < y);
    case BinOp::kLe: return Value::boolean(x <= y);
    case BinOp::kGt: return Value::boolean(x > y);
    case BinOp::kGe: return Value::boolean(x >= y);
    default: break;
  }
  return mismatch("unknown operator");
}

}  // namespace

EvalResult eval_expr(const Env& env, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kLiteral:
      return Value::integer(e.value);
    case Expr::Kind::kIdent: {
      const BigInt* v = env.lookup(e.name);
      if (v == nullptr) return EvalError{EvalErrorKind::kUnboundIdentifier, e.name};
      return Value::integer(*v);
    }
    case Expr::Kind::kNot: {
      EvalResult inner = eval_expr(env, e.operands[0]);
      if (!ok(inner)) return inner;
      const Value& v = std::get<Value>(inner);
      if (!v.is_bool()) return mismatch("'!' applied to an integer");
      return Value::boolean(!v.as_bool());
    }
    case Expr::Kind::kBinary:
      return eval_binary(env, e);
  }
  return mismatch("unknown expression");
}

BigInt decode_int(std::span<const std::uint8_t> bytes, IntKind kind) {
  if (bytes.size() != static_cast<std::size_t>(kind.bytes())) {
    throw LengthMismatch("expected " + std::to_string(kind.bytes()) + " bytes, got " +
                         std::to_string(bytes.size()));
  }
  BigInt n = 0;
  if (kind.endian == Endian::kBig) {
    for (std::uint8_t b : bytes) n = (n << 8) | b;
  } else {
    for (auto it = bytes.rbegin(); it != bytes.rend(); ++it) n = (n << 8) | *it;
  }
  return n;
}

}  // namespace tdforge

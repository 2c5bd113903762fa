#include <functional>
#include <map>
#include <set>

#include "tdforge/eval.hpp"
#include "tdforge/frontend.hpp"

namespace tdforge {

namespace {

enum class Ty { kInt, kBool, kError };

enum class NameKind { kScalar, kAggregate };

class Checker {
 public:
  explicit Checker(const Spec& spec) : spec_(spec) {}

  std::vector<Diagnostic> run() {
    check_unique_names();
    for (const auto& def : spec_.defs()) check_def(def);
    bool acyclic = check_cycles();
    if (acyclic) check_consume_all();
    check_entry();
    return std::move(diags_);
  }

 private:
  using Scope = std::map<std::string, NameKind, std::less<>>;

  void error(std::string_view code, std::string msg, SourceSpan span) {
    diags_.push_back({std::string(code), std::move(msg), span});
  }

  void check_unique_names() {
    std::set<std::string, std::less<>> types;
    std::set<std::string, std::less<>> constants;
    for (const auto& def : spec_.defs()) {
      if (!types.insert(def.name).second) {
        error(diag::kDuplicate, "duplicate type definition '" + def.name + "'", def.span);
      }
      if (const auto* e = std::get_if<EnumBody>(&def.body)) {
        for (const auto& c : e->constants) {
          if (!constants.insert(c.name).second) {
            error(diag::kDuplicate, "duplicate enum constant '" + c.name + "'", c.span);
          }
          if (c.value > e->underlying.max_value()) {
            error(diag::kEnumRange,
                  "enum constant '" + c.name + "' does not fit in " + e->underlying.keyword(), c.span);
          }
        }
      }
    }
  }

  // ---- expressions ----

  Ty expr_type(const Expr& e, const Scope& scope, bool params_only = false) {
    switch (e.kind) {
      case Expr::Kind::kLiteral:
        return Ty::kInt;
      case Expr::Kind::kIdent: {
        if (auto it = scope.find(e.name); it != scope.end()) {
          if (it->second == NameKind::kAggregate) {
            error(diag::kTypeMismatch, "'" + e.name + "' is not an integer field", e.span);
            return Ty::kError;
          }
          return Ty::kInt;
        }
        if (spec_.enum_constant(e.name)) return Ty::kInt;
        if (params_only) {
          error(diag::kScrutineeNotParam,
                "casetype scrutinee may only reference parameters; '" + e.name + "' is not one", e.span);
        } else {
          error(diag::kUnresolvedIdent, "unresolved identifier '" + e.name + "'", e.span);
        }
        return Ty::kError;
      }
      case Expr::Kind::kNot: {
        Ty t = expr_type(e.operands[0], scope, params_only);
        if (t == Ty::kInt) {
          error(diag::kTypeMismatch, "operand of '!' must be boolean", e.span);
          return Ty::kError;
        }
        return t == Ty::kError ? Ty::kError : Ty::kBool;
      }
      case Expr::Kind::kBinary:
        break;
    }
    Ty a = expr_type(e.operands[0], scope, params_only);
    Ty b = expr_type(e.operands[1], scope, params_only);
    if (a == Ty::kError || b == Ty::kError) return Ty::kError;
    std::string sym(binop_symbol(e.op));
    switch (e.op) {
      case BinOp::kAnd:
      case BinOp::kOr:
        if (a != Ty::kBool || b != Ty::kBool) {
          error(diag::kTypeMismatch, "operands of '" + sym + "' must be boolean", e.span);
          return Ty::kError;
        }
        return Ty::kBool;
      case BinOp::kEq:
      case BinOp::kNe:
        if (a != b) {
          error(diag::kTypeMismatch, "operands of '" + sym + "' must have the same type", e.span);
          return Ty::kError;
        }
        return Ty::kBool;
      case BinOp::kLt:
      case BinOp::kLe:
      case BinOp::kGt:
      case BinOp::kGe:
        if (a != Ty::kInt || b != Ty::kInt) {
          error(diag::kTypeMismatch, "operands of '" + sym + "' must be integers", e.span);
          return Ty::kError;
        }
        return Ty::kBool;
      case BinOp::kShl:
      case BinOp::kShr: {
        const Expr& amount = e.operands[1];
        if (amount.kind != Expr::Kind::kLiteral || amount.value > kMaxShift) {
          error(diag::kShiftAmount,
                "shift amount must be an integer literal no larger than " + std::to_string(kMaxShift),
                amount.span);
          return Ty::kError;
        }
        [[fallthrough]];
      }
      default:
        if (a != Ty::kInt || b != Ty::kInt) {
          error(diag::kTypeMismatch, "operands of '" + sym + "' must be integers", e.span);
          return Ty::kError;
        }
        return Ty::kInt;
    }
  }

  void expect_int(const Expr& e, const Scope& scope, std::string_view what) {
    if (expr_type(e, scope) == Ty::kBool) {
      error(diag::kTypeMismatch, std::string(what) + " must be an integer expression", e.span);
    }
  }

  // ---- fields ----

  /// Checks one field against `scope`, then binds its name.
  void check_field(const FieldDecl& f, Scope& scope) {
    bool scalar = false;
    switch (f.type.kind) {
      case TypeRef::Kind::kInt:
        scalar = true;
        break;
      case TypeRef::Kind::kUnit:
        break;
      case TypeRef::Kind::kNamed: {
        const TypeDef* target = spec_.find(f.type.name);
        if (target == nullptr) {
          error(diag::kUnresolvedType, "unresolved type '" + f.type.name + "'", f.type.span);
          break;
        }
        if (target->is_enum()) scalar = true;
        std::size_t want = target->params.size();
        if (f.type.args.size() != want) {
          error(diag::kArity,
                "type '" + target->name + "' expects " + std::to_string(want) + " argument(s), got " +
                    std::to_string(f.type.args.size()),
                f.type.span);
        }
        for (const auto& arg : f.type.args) expect_int(arg, scope, "type argument");
        break;
      }
    }

    if (f.bitwidth) {
      if (f.type.kind != TypeRef::Kind::kInt) {
        error(diag::kBitwidth, "bitfield '" + f.name + "' must have an integer type", f.span);
      } else if (*f.bitwidth < 1 || *f.bitwidth > f.type.int_kind.bits) {
        error(diag::kBitwidth,
              "bit width of '" + f.name + "' must be between 1 and " +
                  std::to_string(f.type.int_kind.bits),
              f.span);
      }
    }

    if (f.array != ArrayForm::kNone) {
      if (f.type.kind != TypeRef::Kind::kInt || f.type.int_kind.bits != 8) {
        error(diag::kArrayElement, "array field '" + f.name + "' must have element type UINT8", f.span);
      }
      if (f.array_size) expect_int(*f.array_size, scope, "array size");
      scalar = true;   // arrays bind their byte length
    }

    if (scope.contains(f.name) || spec_.enum_constant(f.name)) {
      error(diag::kDuplicate, "duplicate name '" + f.name + "'", f.span);
    }

    // The field is visible inside its own constraint.
    Scope inner = scope;
    inner.emplace(f.name, scalar ? NameKind::kScalar : NameKind::kAggregate);
    if (f.constraint) {
      bool constrainable = f.array == ArrayForm::kNone && scalar;
      if (!constrainable) {
        error(diag::kConstraintTarget,
              "constraint on '" + f.name + "' requires an integer or enum field", f.constraint->span);
      } else {
        Ty t = expr_type(*f.constraint, inner);
        if (t == Ty::kInt) {
          error(diag::kTypeMismatch, "constraint on '" + f.name + "' must be boolean", f.constraint->span);
        }
      }
    }
    scope.emplace(f.name, scalar ? NameKind::kScalar : NameKind::kAggregate);
  }

  void check_bitfield_runs(const std::vector<FieldDecl>& fields) {
    std::optional<IntKind> run_kind;
    int filled = 0;
    const FieldDecl* last = nullptr;
    auto close_run = [&] {
      if (run_kind && filled != 0) {
        error(diag::kBitfieldFill,
              "bitfields on " + run_kind->keyword() + " fill " + std::to_string(filled) + " of " +
                  std::to_string(run_kind->bits) + " container bits",
              last->span);
      }
      run_kind.reset();
      filled = 0;
    };
    for (const auto& f : fields) {
      bool is_bits = f.bitwidth && f.type.kind == TypeRef::Kind::kInt && *f.bitwidth >= 1 &&
                     *f.bitwidth <= f.type.int_kind.bits;
      if (!is_bits || (run_kind && !(*run_kind == f.type.int_kind))) close_run();
      if (!is_bits) continue;
      run_kind = f.type.int_kind;
      last = &f;
      filled += *f.bitwidth;
      if (filled == run_kind->bits) {
        filled = 0;
      } else if (filled > run_kind->bits) {
        error(diag::kBitfieldFill,
              "bitfield '" + f.name + "' overflows its " + run_kind->keyword() + " container", f.span);
        filled = 0;
      }
    }
    close_run();
  }

  void check_def(const TypeDef& def) {
    Scope scope;
    for (const auto& p : def.params) {
      if (!scope.emplace(p.name, NameKind::kScalar).second || spec_.enum_constant(p.name)) {
        error(diag::kDuplicate, "duplicate parameter '" + p.name + "'", p.span);
      }
    }
    if (const auto* s = std::get_if<StructBody>(&def.body)) {
      for (const auto& f : s->fields) check_field(f, scope);
      check_bitfield_runs(s->fields);
    } else if (const auto* c = std::get_if<CasetypeBody>(&def.body)) {
      Ty t = expr_type(c->scrutinee, scope, /*params_only=*/true);
      if (t == Ty::kBool) {
        error(diag::kTypeMismatch, "casetype scrutinee must be an integer expression", c->scrutinee.span);
      }
      std::set<BigInt> tags;
      for (const auto& arm : c->cases) {
        if (!tags.insert(arm.tag).second) {
          error(diag::kDuplicateCase, "duplicate case tag " + arm.tag.str(), arm.span);
        }
        Scope arm_scope = scope;
        check_field(arm.field, arm_scope);
        check_bitfield_runs({arm.field});
      }
    }
  }

  // ---- whole-spec properties ----

  std::vector<const FieldDecl*> fields_of(const TypeDef& def) const {
    std::vector<const FieldDecl*> out;
    if (const auto* s = std::get_if<StructBody>(&def.body)) {
      for (const auto& f : s->fields) out.push_back(&f);
    } else if (const auto* c = std::get_if<CasetypeBody>(&def.body)) {
      for (const auto& arm : c->cases) out.push_back(&arm.field);
    }
    return out;
  }

  bool check_cycles() {
    std::map<std::string, int, std::less<>> colour;
    bool ok = true;
    std::function<void(const TypeDef&)> visit = [&](const TypeDef& def) {
      colour[def.name] = 1;
      for (const FieldDecl* f : fields_of(def)) {
        if (f->type.kind != TypeRef::Kind::kNamed) continue;
        const TypeDef* target = spec_.find(f->type.name);
        if (target == nullptr) continue;
        int c = colour[target->name];
        if (c == 1) {
          error(diag::kRecursive, "recursive reference to type '" + target->name + "'", f->type.span);
          ok = false;
        } else if (c == 0) {
          visit(*target);
        }
      }
      colour[def.name] = 2;
    };
    for (const auto& def : spec_.defs()) {
      if (colour[def.name] == 0) visit(def);
    }
    return ok;
  }

  bool may_consume_all(const TypeDef& def, std::map<std::string, bool, std::less<>>& memo) {
    if (auto it = memo.find(def.name); it != memo.end()) return it->second;
    bool result = false;
    for (const FieldDecl* f : fields_of(def)) result = result || field_consumes_all(*f, memo);
    memo[def.name] = result;
    return result;
  }

  bool field_consumes_all(const FieldDecl& f, std::map<std::string, bool, std::less<>>& memo) {
    if (f.array == ArrayForm::kConsumeAll) return true;
    if (f.type.kind != TypeRef::Kind::kNamed) return false;
    const TypeDef* target = spec_.find(f.type.name);
    return target != nullptr && may_consume_all(*target, memo);
  }

  void check_consume_all() {
    std::map<std::string, bool, std::less<>> memo;
    for (const auto& def : spec_.defs()) {
      const auto* s = std::get_if<StructBody>(&def.body);
      if (s == nullptr) continue;
      for (std::size_t i = 0; i + 1 < s->fields.size(); ++i) {
        if (field_consumes_all(s->fields[i], memo)) {
          error(diag::kConsumeAllTail,
                "field '" + s->fields[i].name + "' consumes all remaining input but is not the last field",
                s->fields[i].span);
        }
      }
    }
  }

  void check_entry() {
    const TypeDef* entry = spec_.find(spec_.entry());
    if (entry == nullptr) {
      SourceSpan span = spec_.defs().empty() ? SourceSpan{} : spec_.defs().back().span;
      error(diag::kEntry, "entry type '" + spec_.entry() + "' is not defined", span);
    } else if (!entry->params.empty()) {
      error(diag::kEntry, "entry type '" + entry->name + "' must not take parameters", entry->span);
    }
  }

  const Spec& spec_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> typecheck(const Spec& spec) { return Checker(spec).run(); }

}  // namespace tdforge

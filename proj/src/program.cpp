#include "tdforge/program.hpp"

#include <functional>
#include <map>
#include <sstream>

namespace tdforge {

LExpr LExpr::constant(BigInt v) {
  LExpr e;
  e.kind = Kind::kConst;
  e.value = std::move(v);
  return e;
}

LExpr LExpr::variable(VarId v) {
  LExpr e;
  e.kind = Kind::kVar;
  e.var = v;
  return e;
}

LExpr LExpr::negate(LExpr inner) {
  LExpr e;
  e.kind = Kind::kNot;
  e.operands.push_back(std::move(inner));
  return e;
}

LExpr LExpr::binary(BinOp op, LExpr lhs, LExpr rhs) {
  LExpr e;
  e.kind = Kind::kBinary;
  e.op = op;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

// ---------------------------------------------------------------------------
// Lowering

namespace {

class Lowerer {
 public:
  explicit Lowerer(const Spec& spec) : spec_(spec) {}

  FirstOrderProgram run() {
    prog_.entry = spec_.entry();
    const TypeDef& entry = spec_.entry_def();
    lower_def(entry, {}, "", entry.name, prog_.steps);
    return std::move(prog_);
  }

 private:
  using Scope = std::map<std::string, LExpr, std::less<>>;

  VarId new_var(std::string name, bool visible) {
    prog_.vars.push_back({std::move(name), visible});
    return static_cast<VarId>(prog_.vars.size() - 1);
  }

  LExpr lower(const Expr& e, const Scope& scope) const {
    switch (e.kind) {
      case Expr::Kind::kLiteral:
        return LExpr::constant(e.value);
      case Expr::Kind::kIdent: {
        if (auto it = scope.find(e.name); it != scope.end()) return it->second;
        if (auto c = spec_.enum_constant(e.name)) return LExpr::constant(*c);
        throw std::logic_error("unresolved identifier during lowering: " + e.name);
      }
      case Expr::Kind::kNot:
        return LExpr::negate(lower(e.operands[0], scope));
      case Expr::Kind::kBinary:
        break;
    }
    return LExpr::binary(e.op, lower(e.operands[0], scope), lower(e.operands[1], scope));
  }

  static Step check(LExpr cond, FailureReason reason, std::string field, SourceSpan span) {
    return Step{CheckConstraint{std::move(cond), std::nullopt, reason, std::move(field), span}};
  }

  /// Returns the variable holding the scalar value when `def` is an enum.
  std::optional<VarId> lower_def(const TypeDef& def, const std::vector<VarId>& params,
                                 const std::string& prefix, const std::string& scalar_name,
                                 StepList& out) {
    Scope scope;
    for (std::size_t i = 0; i < def.params.size(); ++i) {
      scope.emplace(def.params[i].name, LExpr::variable(params[i]));
    }

    if (const auto* s = std::get_if<StructBody>(&def.body)) {
      for (const FieldGroup& g : group_fields(s->fields)) {
        if (g.bitfields) {
          lower_bits(s->fields, g, scope, prefix, out);
        } else {
          lower_field(s->fields[g.first], scope, prefix, out);
        }
      }
    } else if (const auto* c = std::get_if<CasetypeBody>(&def.body)) {
      Dispatch d;
      d.scrutinee = lower(c->scrutinee, scope);
      d.casetype = def.name;
      d.span = def.span;
      for (const auto& arm : c->cases) {
        DispatchCase dc;
        dc.tag = arm.tag;
        Scope arm_scope = scope;
        lower_field(arm.field, arm_scope, prefix, dc.body);
        d.cases.push_back(std::move(dc));
      }
      out.push_back(Step{std::move(d)});
    } else if (const auto* e = std::get_if<EnumBody>(&def.body)) {
      VarId v = new_var(scalar_name, true);
      out.push_back(Step{ReadInt{v, e->underlying, scalar_name}});
      std::optional<LExpr> member;
      for (const auto& k : e->constants) {
        LExpr eq = LExpr::binary(BinOp::kEq, LExpr::variable(v), LExpr::constant(k.value));
        member = member ? LExpr::binary(BinOp::kOr, std::move(*member), std::move(eq)) : std::move(eq);
      }
      out.push_back(check(std::move(*member), FailureReason::kEnumOutOfRange, scalar_name, def.span));
      return v;
    }
    return std::nullopt;
  }

  void lower_bits(const std::vector<FieldDecl>& fields, const FieldGroup& g, Scope& scope,
                  const std::string& prefix, StepList& out) {
    const FieldDecl& first = fields[g.first];
    ReadBits rb;
    rb.kind = first.type.int_kind;
    rb.field = prefix + first.name;
    rb.container = new_var(prefix + first.name + "$bits", false);
    for (std::size_t i = g.first; i < g.first + g.count; ++i) {
      VarId v = new_var(prefix + fields[i].name, true);
      rb.fields.emplace_back(v, *fields[i].bitwidth);
      scope.insert_or_assign(fields[i].name, LExpr::variable(v));
    }
    out.push_back(Step{std::move(rb)});
    for (std::size_t i = g.first; i < g.first + g.count; ++i) {
      if (fields[i].constraint) {
        out.push_back(check(lower(*fields[i].constraint, scope), FailureReason::kConstraintViolated,
                            prefix + fields[i].name, fields[i].span));
      }
    }
  }

  void lower_field(const FieldDecl& f, Scope& scope, const std::string& prefix, StepList& out) {
    const std::string path = prefix + f.name;
    auto bind = [&](VarId v) { scope.insert_or_assign(f.name, LExpr::variable(v)); };
    auto constrain = [&] {
      if (f.constraint) {
        out.push_back(check(lower(*f.constraint, scope), FailureReason::kConstraintViolated, path, f.span));
      }
    };

    if (f.array == ArrayForm::kConsumeAll) {
      VarId v = new_var(path, true);
      out.push_back(Step{ConsumeAll{v, path}});
      bind(v);
      return;
    }
    if (f.array != ArrayForm::kNone) {
      VarId v = new_var(path, true);
      out.push_back(Step{SkipBytes{v, lower(*f.array_size, scope), path}});
      bind(v);
      return;
    }

    switch (f.type.kind) {
      case TypeRef::Kind::kUnit:
        return;
      case TypeRef::Kind::kInt: {
        VarId v = new_var(path, true);
        out.push_back(Step{ReadInt{v, f.type.int_kind, path}});
        bind(v);
        constrain();
        return;
      }
      case TypeRef::Kind::kNamed:
        break;
    }

    const TypeDef& target = *spec_.find(f.type.name);
    if (target.is_enum()) {
      VarId v = *lower_def(target, {}, prefix, path, out);
      bind(v);
      constrain();
      return;
    }
    std::vector<VarId> params;
    for (std::size_t i = 0; i < f.type.args.size(); ++i) {
      VarId p = new_var(path + "." + target.params[i].name, false);
      out.push_back(Step{BindParam{p, lower(f.type.args[i], scope), path}});
      params.push_back(p);
    }
    lower_def(target, params, path + ".", path, out);
  }

  const Spec& spec_;
  FirstOrderProgram prog_;
};

void tag_branches(StepList& steps, InstrumentPolicy policy, std::vector<BranchPoint>& out) {
  for (Step& step : steps) {
    if (auto* c = std::get_if<CheckConstraint>(&step.v)) {
      c->branch.reset();
      if (policy == InstrumentPolicy::kDefault || policy == InstrumentPolicy::kConstraintsOnly) {
        c->branch = static_cast<int>(out.size());
        out.push_back({*c->branch, 2, BranchKind::kConstraint, c->field, c->span});
      }
    } else if (auto* d = std::get_if<Dispatch>(&step.v)) {
      d->branch.reset();
      if (policy == InstrumentPolicy::kDefault || policy == InstrumentPolicy::kCasetypesOnly) {
        d->branch = static_cast<int>(out.size());
        out.push_back({*d->branch, static_cast<int>(d->cases.size()) + 1, BranchKind::kCasetype,
                       d->casetype, d->span});
      }
      for (auto& c : d->cases) tag_branches(c.body, policy, out);
    }
  }
}

}  // namespace

FirstOrderProgram instrument(FirstOrderProgram program, InstrumentPolicy policy) {
  program.branch_points.clear();
  tag_branches(program.steps, policy, program.branch_points);
  return program;
}

FirstOrderProgram specialize(const Spec& spec) {
  return instrument(Lowerer(spec).run(), InstrumentPolicy::kDefault);
}

// ---------------------------------------------------------------------------
// Concrete replay

namespace {

class Replayer {
 public:
  Replayer(const FirstOrderProgram& prog, std::span<const std::uint8_t> input)
      : prog_(prog), input_(input), values_(prog.vars.size()) {}

  std::optional<ParseFailure> exec(const StepList& steps) {
    for (const Step& step : steps) {
      if (auto failure = std::visit([&](const auto& s) { return exec_one(s); }, step.v)) {
        return failure;
      }
    }
    return std::nullopt;
  }

  std::size_t pos() const { return pos_; }
  Bindings bindings_;
  BranchTrace trace_;
  std::vector<int> visited_;

 private:
  ParseFailure fail(FailureReason reason, const std::string& where) const {
    return ParseFailure{reason, where, pos_};
  }

  void assign(VarId v, BigInt value) {
    if (prog_.vars[v].visible) bindings_.emplace_back(prog_.vars[v].name, value);
    values_[v] = std::move(value);
  }

  EvalResult eval(const LExpr& e) const {
    switch (e.kind) {
      case LExpr::Kind::kConst:
        return Value::integer(e.value);
      case LExpr::Kind::kVar:
        if (!values_[e.var]) return EvalError{EvalErrorKind::kUnboundIdentifier, prog_.vars[e.var].name};
        return Value::integer(*values_[e.var]);
      case LExpr::Kind::kNot: {
        EvalResult r = eval(e.operands[0]);
        if (!ok(r)) return r;
        return Value::boolean(!std::get<Value>(r).as_bool());
      }
      case LExpr::Kind::kBinary:
        break;
    }
    EvalResult lhs = eval(e.operands[0]);
    if (!ok(lhs)) return lhs;
    const Value a = std::get<Value>(lhs);
    if (e.op == BinOp::kAnd && !a.as_bool()) return Value::boolean(false);
    if (e.op == BinOp::kOr && a.as_bool()) return Value::boolean(true);
    EvalResult rhs = eval(e.operands[1]);
    if (!ok(rhs)) return rhs;
    const Value b = std::get<Value>(rhs);
    switch (e.op) {
      case BinOp::kAnd:
      case BinOp::kOr: return b;
      case BinOp::kEq: return Value::boolean(a == b);
      case BinOp::kNe: return Value::boolean(!(a == b));
      default: break;
    }
    const BigInt& x = a.as_int();
    const BigInt& y = b.as_int();
    const BigInt bitwise_limit = BigInt(1) << kBitwiseWidth;
    switch (e.op) {
      case BinOp::kAdd: return Value::integer(x + y);
      case BinOp::kSub:
        if (x < y) return EvalError{EvalErrorKind::kNegativeResult, "underflow"};
        return Value::integer(x - y);
      case BinOp::kMul: return Value::integer(x * y);
      case BinOp::kShl: return Value::integer(x << y.convert_to<unsigned>());
      case BinOp::kShr: return Value::integer(x >> y.convert_to<unsigned>());
      case BinOp::kBitAnd:
      case BinOp::kBitOr:
      case BinOp::kBitXor:
        if (x >= bitwise_limit || y >= bitwise_limit) {
          return EvalError{EvalErrorKind::kBitwiseRange, "bitwise operand out of range"};
        }
        if (e.op == BinOp::kBitAnd) return Value::integer(x & y);
        if (e.op == BinOp::kBitOr) return Value::integer(x | y);
        return Value::integer(x ^ y);
      case BinOp::kLt: return Value::boolean(x < y);
      case BinOp::kLe: return Value::boolean(x <= y);
      case BinOp::kGt: return Value::boolean(x > y);
      case BinOp::kGe: return Value::boolean(x >= y);
      default: break;
    }
    return EvalError{EvalErrorKind::kTypeMismatch, "bad operator"};
  }

  std::optional<BigInt> read(IntKind kind) {
    std::size_t n = static_cast<std::size_t>(kind.bytes());
    if (input_.size() - pos_ < n) return std::nullopt;
    BigInt v = decode_int(input_.subspan(pos_, n), kind);
    pos_ += n;
    return v;
  }

  std::optional<ParseFailure> exec_one(const ReadInt& s) {
    auto v = read(s.kind);
    if (!v) return fail(FailureReason::kInsufficientInput, s.field);
    assign(s.dest, *v);
    return std::nullopt;
  }

  std::optional<ParseFailure> exec_one(const ReadBits& s) {
    auto c = read(s.kind);
    if (!c) return fail(FailureReason::kInsufficientInput, s.field);
    values_[s.container] = *c;
    int used = 0;
    for (const auto& [dest, width] : s.fields) {
      used += width;
      assign(dest, (*c >> (s.kind.bits - used)) & ((BigInt(1) << width) - 1));
    }
    return std::nullopt;
  }

  std::optional<ParseFailure> exec_one(const BindParam& s) {
    EvalResult r = eval(s.value);
    if (!ok(r)) return fail(FailureReason::kConstraintViolated, s.field);
    assign(s.dest, std::get<Value>(r).as_int());
    return std::nullopt;
  }

  std::optional<ParseFailure> exec_one(const CheckConstraint& s) {
    EvalResult r = eval(s.cond);
    bool holds = ok(r) && std::get<Value>(r).as_bool();
    if (s.branch) {
      trace_.push_back(holds ? 0 : 1);
      visited_.push_back(*s.branch);
    }
    if (!holds) return fail(s.reason, s.field);
    return std::nullopt;
  }

  std::optional<ParseFailure> exec_one(const Dispatch& s) {
    EvalResult r = eval(s.scrutinee);
    std::size_t chosen = s.cases.size();
    if (ok(r)) {
      for (std::size_t i = 0; i < s.cases.size(); ++i) {
        if (s.cases[i].tag == std::get<Value>(r).as_int()) {
          chosen = i;
          break;
        }
      }
    }
    if (s.branch) {
      trace_.push_back(static_cast<int>(chosen));
      visited_.push_back(*s.branch);
    }
    if (chosen == s.cases.size()) return fail(FailureReason::kNoCaseMatched, s.casetype);
    return exec(s.cases[chosen].body);
  }

  std::optional<ParseFailure> exec_one(const SkipBytes& s) {
    EvalResult r = eval(s.length);
    if (!ok(r)) return fail(FailureReason::kConstraintViolated, s.field);
    const BigInt& n = std::get<Value>(r).as_int();
    if (n > input_.size() - pos_) return fail(FailureReason::kInsufficientInput, s.field);
    pos_ += n.convert_to<std::size_t>();
    assign(s.dest, n);
    return std::nullopt;
  }

  std::optional<ParseFailure> exec_one(const ConsumeAll& s) {
    BigInt n = input_.size() - pos_;
    pos_ = input_.size();
    assign(s.dest, n);
    return std::nullopt;
  }

  const FirstOrderProgram& prog_;
  std::span<const std::uint8_t> input_;
  std::size_t pos_ = 0;
  std::vector<std::optional<BigInt>> values_;
};

}  // namespace

ReplayResult replay(const FirstOrderProgram& program, std::span<const std::uint8_t> input,
                    AcceptMode mode) {
  Replayer r(program, input);
  std::optional<ParseFailure> failure = r.exec(program.steps);
  ReplayResult out{false, ParseSuccess{}, std::move(r.trace_), std::move(r.visited_)};
  if (failure) {
    out.outcome = *failure;
  } else if (mode == AcceptMode::kStrict && r.pos() != input.size()) {
    out.outcome = ParseFailure{FailureReason::kTrailingBytes, "", r.pos()};
  } else {
    out.accepted = true;
    out.outcome = ParseSuccess{r.pos(), std::move(r.bindings_)};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Static trace analysis

namespace {

struct Frame {
  const StepList* steps;
  std::size_t next;
};

void walk(std::vector<Frame> frames, std::size_t depth, const BranchTrace& prefix, std::set<int>& out) {
  const std::size_t k = prefix.size();
  while (!frames.empty()) {
    Frame& top = frames.back();
    if (top.next == top.steps->size()) {
      frames.pop_back();
      continue;
    }
    const Step& step = (*top.steps)[top.next++];
    if (const auto* c = std::get_if<CheckConstraint>(&step.v)) {
      if (!c->branch) continue;   // only the passing side can reach later branches
      if (depth == k) {
        out.insert(*c->branch);
        return;
      }
      if (prefix[depth++] != 0) return;
    } else if (const auto* d = std::get_if<Dispatch>(&step.v)) {
      if (!d->branch) {
        for (const auto& c : d->cases) {
          std::vector<Frame> copy = frames;
          copy.push_back({&c.body, 0});
          walk(std::move(copy), depth, prefix, out);
        }
        return;
      }
      if (depth == k) {
        out.insert(*d->branch);
        return;
      }
      std::size_t o = static_cast<std::size_t>(prefix[depth++]);
      if (o >= d->cases.size()) return;
      frames.push_back({&d->cases[o].body, 0});
    }
  }
}

}  // namespace

std::set<int> branches_after(const FirstOrderProgram& program, const BranchTrace& prefix) {
  std::set<int> out;
  walk({{&program.steps, 0}}, 0, prefix, out);
  return out;
}

// ---------------------------------------------------------------------------
// Debug dump and lint

std::string print_lexpr(const LExpr& e) {
  switch (e.kind) {
    case LExpr::Kind::kConst: return e.value.str();
    case LExpr::Kind::kVar: return "v" + std::to_string(e.var);
    case LExpr::Kind::kNot: return "!" + print_lexpr(e.operands[0]);
    case LExpr::Kind::kBinary: break;
  }
  return "(" + print_lexpr(e.operands[0]) + " " + std::string(binop_symbol(e.op)) + " " +
         print_lexpr(e.operands[1]) + ")";
}

namespace {

std::string branch_tag(const std::optional<int>& b) {
  return b ? " [b" + std::to_string(*b) + "]" : "";
}

void dump_steps(const StepList& steps, int indent, std::ostringstream& os) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  for (const Step& step : steps) {
    if (const auto* s = std::get_if<ReadInt>(&step.v)) {
      os << pad << "ReadInt v" << s->dest << " " << s->kind.keyword() << "\n";
    } else if (const auto* s = std::get_if<ReadBits>(&step.v)) {
      os << pad << "ReadBits v" << s->container << " " << s->kind.keyword() << " ->";
      for (const auto& [v, w] : s->fields) os << " v" << v << ":" << w;
      os << "\n";
    } else if (const auto* s = std::get_if<BindParam>(&step.v)) {
      os << pad << "BindParam v" << s->dest << " = " << print_lexpr(s->value) << "\n";
    } else if (const auto* s = std::get_if<CheckConstraint>(&step.v)) {
      os << pad << "CheckConstraint" << branch_tag(s->branch) << " " << print_lexpr(s->cond)
         << " else " << to_string(s->reason) << "(" << s->field << ")\n";
    } else if (const auto* s = std::get_if<Dispatch>(&step.v)) {
      os << pad << "Dispatch" << branch_tag(s->branch) << " " << print_lexpr(s->scrutinee) << " ("
         << s->casetype << ")\n";
      for (const auto& c : s->cases) {
        os << pad << "  case " << c.tag << ":\n";
        dump_steps(c.body, indent + 4, os);
      }
    } else if (const auto* s = std::get_if<SkipBytes>(&step.v)) {
      os << pad << "SkipBytes v" << s->dest << " = " << print_lexpr(s->length) << "\n";
    } else if (const auto* s = std::get_if<ConsumeAll>(&step.v)) {
      os << pad << "ConsumeAll v" << s->dest << "\n";
    }
  }
}

}  // namespace

std::string dump(const FirstOrderProgram& program) {
  std::ostringstream os;
  os << "program " << program.entry << "\n";
  os << "vars:\n";
  for (std::size_t i = 0; i < program.vars.size(); ++i) {
    os << "  v" << i << " " << program.vars[i].name << (program.vars[i].visible ? "" : " (hidden)")
       << "\n";
  }
  os << "branch points:\n";
  for (const auto& b : program.branch_points) {
    os << "  b" << b.id << " " << (b.kind == BranchKind::kConstraint ? "constraint" : "casetype")
       << " arity=" << b.arity << " " << b.label << "\n";
  }
  os << "steps:\n";
  dump_steps(program.steps, 2, os);
  return os.str();
}

namespace {

void lint(const StepList& steps, std::set<VarId>& assigned_on_path, std::set<VarId>& assigned_ever,
          const FirstOrderProgram& prog, std::vector<std::string>& out) {
  std::function<void(const LExpr&)> uses = [&](const LExpr& e) {
    if (e.kind == LExpr::Kind::kVar && !assigned_on_path.contains(e.var)) {
      out.push_back("v" + std::to_string(e.var) + " (" + prog.vars[e.var].name + ") read before assignment");
    }
    for (const auto& o : e.operands) uses(o);
  };
  auto def = [&](VarId v) {
    if (!assigned_ever.insert(v).second) {
      out.push_back("v" + std::to_string(v) + " (" + prog.vars[v].name + ") assigned twice");
    }
    assigned_on_path.insert(v);
  };
  for (const Step& step : steps) {
    if (const auto* s = std::get_if<ReadInt>(&step.v)) {
      def(s->dest);
    } else if (const auto* s = std::get_if<ReadBits>(&step.v)) {
      def(s->container);
      for (const auto& f : s->fields) def(f.first);
    } else if (const auto* s = std::get_if<BindParam>(&step.v)) {
      uses(s->value);
      def(s->dest);
    } else if (const auto* s = std::get_if<CheckConstraint>(&step.v)) {
      uses(s->cond);
    } else if (const auto* s = std::get_if<Dispatch>(&step.v)) {
      uses(s->scrutinee);
      for (const auto& c : s->cases) {
        std::set<VarId> branch_path = assigned_on_path;
        lint(c.body, branch_path, assigned_ever, prog, out);
      }
    } else if (const auto* s = std::get_if<SkipBytes>(&step.v)) {
      uses(s->length);
      def(s->dest);
    } else if (const auto* s = std::get_if<ConsumeAll>(&step.v)) {
      def(s->dest);
    }
  }
}

}  // namespace

std::vector<std::string> single_assignment_violations(const FirstOrderProgram& program) {
  std::vector<std::string> out;
  std::set<VarId> on_path;
  std::set<VarId> ever;
  lint(program.steps, on_path, ever, program, out);
  return out;
}

}  // namespace tdforge

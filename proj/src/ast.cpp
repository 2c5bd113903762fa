#include "tdforge/ast.hpp"

#include <functional>
#include <set>
#include <stdexcept>

namespace tdforge {

IntKind IntKind::make(int bits, Endian endian) {
  if (bits != 8 && bits != 16 && bits != 32 && bits != 64) {
    throw std::invalid_argument("unsupported integer width " + std::to_string(bits));
  }
  return IntKind{bits, bits == 8 ? Endian::kBig : endian};
}

std::string IntKind::keyword() const {
  std::string s = "UINT" + std::to_string(bits);
  if (bits != 8 && endian == Endian::kBig) s += "BE";
  return s;
}

BigInt IntKind::max_value() const { return (BigInt(1) << bits) - 1; }

std::optional<IntKind> int_kind_from_keyword(std::string_view word) {
  static const std::pair<std::string_view, IntKind> kKinds[] = {
      {"UINT8", {8, Endian::kBig}},       {"UINT16", {16, Endian::kLittle}},
      {"UINT16BE", {16, Endian::kBig}},   {"UINT32", {32, Endian::kLittle}},
      {"UINT32BE", {32, Endian::kBig}},   {"UINT64", {64, Endian::kLittle}},
      {"UINT64BE", {64, Endian::kBig}},
  };
  for (const auto& [kw, kind] : kKinds) {
    if (kw == word) return kind;
  }
  return std::nullopt;
}

std::string_view binop_symbol(BinOp op) {
  switch (op) {
    case BinOp::kAdd: return "+";
    case BinOp::kSub: return "-";
    case BinOp::kMul: return "*";
    case BinOp::kShl: return "<<";
    case BinOp::kShr: return ">>";
    case BinOp::kBitAnd: return "&";
    case BinOp::kBitOr: return "|";
    case BinOp::kBitXor: return "^";
    case BinOp::kLt: return "<";
    case BinOp::kLe: return "<=";
    case BinOp::kGt: return ">";
    case BinOp::kGe: return ">=";
    case BinOp::kEq: return "==";
    case BinOp::kNe: return "!=";
    case BinOp::kAnd: return "&&";
    case BinOp::kOr: return "||";
  }
  return "?";
}

Expr Expr::literal(BigInt v, SourceSpan span) {
  Expr e;
  e.kind = Kind::kLiteral;
  e.value = std::move(v);
  e.span = span;
  return e;
}

Expr Expr::ident(std::string name, SourceSpan span) {
  Expr e;
  e.kind = Kind::kIdent;
  e.name = std::move(name);
  e.span = span;
  return e;
}

Expr Expr::negate(Expr inner, SourceSpan span) {
  Expr e;
  e.kind = Kind::kNot;
  e.operands.push_back(std::move(inner));
  e.span = span;
  return e;
}

Expr Expr::binary(BinOp op, Expr lhs, Expr rhs, SourceSpan span) {
  Expr e;
  e.kind = Kind::kBinary;
  e.op = op;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  e.span = span;
  return e;
}

Spec::Spec(std::vector<TypeDef> defs, std::string entry)
    : defs_(std::move(defs)), entry_(std::move(entry)) {
  reindex();
}

void Spec::reindex() {
  index_.clear();
  constants_.clear();
  for (std::size_t i = 0; i < defs_.size(); ++i) {
    index_.emplace(defs_[i].name, i);
    if (const auto* e = std::get_if<EnumBody>(&defs_[i].body)) {
      for (const auto& c : e->constants) constants_.emplace(c.name, c.value);
    }
  }
}

const TypeDef* Spec::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &defs_[it->second];
}

const TypeDef& Spec::entry_def() const {
  const TypeDef* def = find(entry_);
  if (def == nullptr) throw std::logic_error("entry type '" + entry_ + "' is not defined");
  return *def;
}

std::optional<BigInt> Spec::enum_constant(std::string_view name) const {
  auto it = constants_.find(name);
  if (it == constants_.end()) return std::nullopt;
  return it->second;
}

std::vector<FieldGroup> group_fields(const std::vector<FieldDecl>& fields) {
  std::vector<FieldGroup> groups;
  int filled = 0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const FieldDecl& f = fields[i];
    if (!f.bitwidth) {
      groups.push_back({i, 1, false});
      filled = 0;
      continue;
    }
    bool extend = filled != 0 && !groups.empty() && groups.back().bitfields &&
                  fields[groups.back().first].type.int_kind == f.type.int_kind;
    if (extend) {
      ++groups.back().count;
    } else {
      groups.push_back({i, 1, true});
      filled = 0;
    }
    filled += *f.bitwidth;
    if (filled >= f.type.int_kind.bits) filled = 0;
  }
  return groups;
}

bool same_structure(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::kLiteral: return a.value == b.value;
    case Expr::Kind::kIdent: return a.name == b.name;
    case Expr::Kind::kNot: return same_structure(a.operands[0], b.operands[0]);
    case Expr::Kind::kBinary:
      return a.op == b.op && same_structure(a.operands[0], b.operands[0]) &&
             same_structure(a.operands[1], b.operands[1]);
  }
  return false;
}

namespace {

bool same_opt(const std::optional<Expr>& a, const std::optional<Expr>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_structure(*a, *b);
}

bool same_type_ref(const TypeRef& a, const TypeRef& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == TypeRef::Kind::kInt) return a.int_kind == b.int_kind;
  if (a.kind == TypeRef::Kind::kUnit) return true;
  if (a.name != b.name || a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!same_structure(a.args[i], b.args[i])) return false;
  }
  return true;
}

}  // namespace

bool same_structure(const FieldDecl& a, const FieldDecl& b) {
  return a.name == b.name && same_type_ref(a.type, b.type) && a.bitwidth == b.bitwidth &&
         a.array == b.array && same_opt(a.array_size, b.array_size) &&
         same_opt(a.constraint, b.constraint);
}

bool same_structure(const TypeDef& a, const TypeDef& b) {
  if (a.name != b.name || a.params.size() != b.params.size()) return false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].name != b.params[i].name || !(a.params[i].kind == b.params[i].kind)) {
      return false;
    }
  }
  if (a.body.index() != b.body.index()) return false;
  if (const auto* sa = std::get_if<StructBody>(&a.body)) {
    const auto& sb = std::get<StructBody>(b.body);
    if (sa->fields.size() != sb.fields.size()) return false;
    for (std::size_t i = 0; i < sa->fields.size(); ++i) {
      if (!same_structure(sa->fields[i], sb.fields[i])) return false;
    }
    return true;
  }
  if (const auto* ca = std::get_if<CasetypeBody>(&a.body)) {
    const auto& cb = std::get<CasetypeBody>(b.body);
    if (!same_structure(ca->scrutinee, cb.scrutinee) || ca->cases.size() != cb.cases.size()) {
      return false;
    }
    for (std::size_t i = 0; i < ca->cases.size(); ++i) {
      if (ca->cases[i].tag != cb.cases[i].tag ||
          !same_structure(ca->cases[i].field, cb.cases[i].field)) {
        return false;
      }
    }
    return true;
  }
  if (const auto* ea = std::get_if<EnumBody>(&a.body)) {
    const auto& eb = std::get<EnumBody>(b.body);
    if (!(ea->underlying == eb.underlying) || ea->constants.size() != eb.constants.size()) {
      return false;
    }
    for (std::size_t i = 0; i < ea->constants.size(); ++i) {
      if (ea->constants[i].name != eb.constants[i].name ||
          ea->constants[i].value != eb.constants[i].value) {
        return false;
      }
    }
    return true;
  }
  return true;
}

bool same_structure(const Spec& a, const Spec& b) {
  if (a.entry() != b.entry() || a.defs().size() != b.defs().size()) return false;
  for (std::size_t i = 0; i < a.defs().size(); ++i) {
    if (!same_structure(a.defs()[i], b.defs()[i])) return false;
  }
  return true;
}

namespace {

void collect_refs(const FieldDecl& f, std::vector<std::string>& out) {
  if (f.type.kind == TypeRef::Kind::kNamed) out.push_back(f.type.name);
}

std::vector<std::string> type_refs(const TypeDef& def) {
  std::vector<std::string> refs;
  if (const auto* s = std::get_if<StructBody>(&def.body)) {
    for (const auto& f : s->fields) collect_refs(f, refs);
  } else if (const auto* c = std::get_if<CasetypeBody>(&def.body)) {
    for (const auto& arm : c->cases) collect_refs(arm.field, refs);
  }
  return refs;
}

void check_field(const FieldDecl& f, const std::string& where, std::vector<std::string>& out) {
  if (f.bitwidth) {
    if (f.type.kind != TypeRef::Kind::kInt || *f.bitwidth < 1 ||
        *f.bitwidth > f.type.int_kind.bits) {
      out.push_back(where + ": bitwidth out of range on field " + f.name);
    }
  }
  if (f.array != ArrayForm::kNone) {
    if (f.type.kind != TypeRef::Kind::kInt || f.type.int_kind.bits != 8) {
      out.push_back(where + ": array form on non-UINT8 field " + f.name);
    }
  }
}

}  // namespace

std::vector<std::string> invariant_violations(const Spec& spec) {
  std::vector<std::string> out;
  std::set<std::string> constant_names;
  for (const auto& def : spec.defs()) {
    if (const auto* s = std::get_if<StructBody>(&def.body)) {
      for (const auto& f : s->fields) check_field(f, def.name, out);
    } else if (const auto* c = std::get_if<CasetypeBody>(&def.body)) {
      std::set<BigInt> tags;
      for (const auto& arm : c->cases) {
        if (!tags.insert(arm.tag).second) out.push_back(def.name + ": duplicate case tag");
        check_field(arm.field, def.name, out);
      }
    } else if (const auto* e = std::get_if<EnumBody>(&def.body)) {
      for (const auto& k : e->constants) {
        if (!constant_names.insert(k.name).second) {
          out.push_back(def.name + ": duplicate enum constant " + k.name);
        }
        if (k.value > e->underlying.max_value()) {
          out.push_back(def.name + ": enum constant " + k.name + " does not fit");
        }
      }
    }
    for (const auto& ref : type_refs(def)) {
      if (spec.find(ref) == nullptr) out.push_back(def.name + ": unresolved reference " + ref);
    }
  }

  // Reject cycles: colour-marking DFS over named references.
  std::map<std::string, int> colour;
  std::function<bool(const std::string&)> cyclic = [&](const std::string& name) {
    const TypeDef* def = spec.find(name);
    if (def == nullptr) return false;
    int& c = colour[name];
    if (c == 1) return true;
    if (c == 2) return false;
    c = 1;
    for (const auto& ref : type_refs(*def)) {
      if (cyclic(ref)) return true;
    }
    colour[name] = 2;
    return false;
  };
  for (const auto& def : spec.defs()) {
    if (cyclic(def.name)) {
      out.push_back(def.name + ": recursive type reference");
      break;
    }
  }

  const TypeDef* entry = spec.find(spec.entry());
  if (entry == nullptr) {
    out.push_back("entry type '" + spec.entry() + "' is not defined");
  } else if (!entry->params.empty()) {
    out.push_back("entry type '" + spec.entry() + "' has parameters");
  }
  return out;
}

}  // namespace tdforge

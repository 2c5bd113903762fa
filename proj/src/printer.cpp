#include <sstream>

#include "tdforge/frontend.hpp"

namespace tdforge {

namespace {

std::string type_text(const TypeRef& t) {
  switch (t.kind) {
    case TypeRef::Kind::kInt: return t.int_kind.keyword();
    case TypeRef::Kind::kUnit: return "unit";
    case TypeRef::Kind::kNamed: break;
  }
  std::string s = t.name;
  if (!t.args.empty()) {
    s += "(";
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      if (i) s += ", ";
      s += print_expr(t.args[i]);
    }
    s += ")";
  }
  return s;
}

std::string field_text(const FieldDecl& f) {
  std::string s = type_text(f.type) + " " + f.name;
  if (f.bitwidth) s += " : " + std::to_string(*f.bitwidth);
  switch (f.array) {
    case ArrayForm::kNone: break;
    case ArrayForm::kFixedBytes: s += "[" + print_expr(*f.array_size) + "]"; break;
    case ArrayForm::kByteSize: s += "[:byte-size " + print_expr(*f.array_size) + "]"; break;
    case ArrayForm::kConsumeAll: s += "[:consume-all]"; break;
  }
  if (f.constraint) s += " { " + print_expr(*f.constraint) + " }";
  return s + ";";
}

std::string params_text(const std::vector<Param>& params) {
  std::string s = "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) s += ", ";
    s += params[i].kind.keyword() + " " + params[i].name;
  }
  return s + ")";
}

std::string hex(const BigInt& v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

// Fully parenthesized so precedence never changes on reparse.
std::string print_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kLiteral: return e.value.str();
    case Expr::Kind::kIdent: return e.name;
    case Expr::Kind::kNot: return "!" + print_expr(e.operands[0]);
    case Expr::Kind::kBinary: break;
  }
  auto operand = [](const Expr& x) {
    std::string s = print_expr(x);
    return x.kind == Expr::Kind::kBinary ? "(" + s + ")" : s;
  };
  return operand(e.operands[0]) + " " + std::string(binop_symbol(e.op)) + " " + operand(e.operands[1]);
}

std::string print_spec(const Spec& spec) {
  std::ostringstream out;
  for (const auto& def : spec.defs()) {
    if (const auto* s = std::get_if<StructBody>(&def.body)) {
      out << "typedef struct _" << def.name;
      if (!def.params.empty()) out << params_text(def.params);
      out << " {\n";
      for (const auto& f : s->fields) out << "  " << field_text(f) << "\n";
      out << "} " << def.name << ";\n\n";
    } else if (const auto* c = std::get_if<CasetypeBody>(&def.body)) {
      out << "casetype _" << def.name << params_text(def.params) << " {\n";
      out << "  switch (" << print_expr(c->scrutinee) << ") {\n";
      for (const auto& arm : c->cases) {
        out << "    case " << hex(arm.tag) << ": " << field_text(arm.field) << "\n";
      }
      out << "  }\n} " << def.name << ";\n\n";
    } else if (const auto* e = std::get_if<EnumBody>(&def.body)) {
      out << e->underlying.keyword() << " enum _" << def.name << " {\n";
      for (std::size_t i = 0; i < e->constants.size(); ++i) {
        out << "  " << e->constants[i].name << " = " << e->constants[i].value
            << (i + 1 < e->constants.size() ? ",\n" : "\n");
      }
      out << "} " << def.name << ";\n\n";
    } else {
      out << "typedef unit " << def.name << ";\n\n";
    }
  }
  return out.str();
}

}  // namespace tdforge

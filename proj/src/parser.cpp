#include "tdforge/frontend.hpp"

namespace tdforge {

namespace {

struct ParseAbort {};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  std::vector<TypeDef> definitions() {
    std::vector<TypeDef> defs;
    if (at_end()) fail(diag::kExpectedTypedef, "expected typedef");
    while (!at_end()) defs.push_back(definition());
    return defs;
  }

  std::vector<Diagnostic>& diags() { return diags_; }

 private:
  // ---- token helpers ----

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at_end() const { return peek().kind == TokenKind::kEnd; }
  const Token& take() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  SourcePos last_end() const { return pos_ == 0 ? toks_[0].span.begin : toks_[pos_ - 1].span.end; }

  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    return peek(ahead).kind == TokenKind::kPunct && peek(ahead).text == p;
  }
  bool is_keyword(std::string_view k) const {
    return peek().kind == TokenKind::kKeyword && peek().text == k;
  }

  [[noreturn]] void fail(std::string_view code, std::string message) {
    diags_.push_back({std::string(code), std::move(message), peek().span});
    throw ParseAbort{};
  }

  static std::string describe(const Token& t) {
    if (t.kind == TokenKind::kEnd) return "end of input";
    return "'" + t.text + "'";
  }

  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail(diag::kUnexpectedToken, "expected '" + std::string(p) + "', found " + describe(peek()));
    take();
  }

  void expect_keyword(std::string_view k) {
    if (!is_keyword(k)) fail(diag::kUnexpectedToken, "expected '" + std::string(k) + "', found " + describe(peek()));
    take();
  }

  std::string identifier(std::string_view what) {
    const Token& t = peek();
    if (t.kind == TokenKind::kKeyword || (t.kind == TokenKind::kIdent && is_reserved_word(t.text))) {
      fail(diag::kReservedKeyword,
           "'" + t.text + "' is a reserved keyword and cannot be used as " + std::string(what));
    }
    if (t.kind != TokenKind::kIdent) {
      fail(diag::kUnexpectedToken, "expected " + std::string(what) + ", found " + describe(t));
    }
    return take().text;
  }

  std::optional<IntKind> int_keyword() const {
    if (peek().kind != TokenKind::kKeyword) return std::nullopt;
    return int_kind_from_keyword(peek().text);
  }

  BigInt integer(std::string_view what) {
    if (peek().kind != TokenKind::kInt) {
      fail(diag::kUnexpectedToken, "expected " + std::string(what) + ", found " + describe(peek()));
    }
    return take().value;
  }

  // ---- definitions ----

  TypeDef definition() {
    SourcePos start = peek().span.begin;
    TypeDef def;
    if (is_keyword("typedef")) {
      take();
      if (is_keyword("struct")) {
        take();
        struct_def(def);
      } else if (is_keyword("unit")) {
        take();
        def.body = UnitBody{};
        def.name = identifier("a type name");
        expect_punct(";");
      } else {
        fail(diag::kUnexpectedToken, "expected 'struct' or 'unit' after 'typedef', found " + describe(peek()));
      }
    } else if (is_keyword("casetype")) {
      take();
      casetype_def(def);
    } else if (auto kind = int_keyword(); kind && peek(1).kind == TokenKind::kKeyword && peek(1).text == "enum") {
      take();
      take();
      enum_def(def, *kind);
    } else {
      fail(diag::kExpectedTypedef, "expected typedef, found " + describe(peek()));
    }
    def.span = {start, last_end()};
    return def;
  }

  void optional_tag(TypeDef& def) {
    if (peek().kind == TokenKind::kIdent || peek().kind == TokenKind::kKeyword) {
      if (!is_punct("{") && !is_punct("(")) def.tag = identifier("a type tag");
    }
  }

  std::vector<Param> params() {
    std::vector<Param> out;
    expect_punct("(");
    if (is_punct(")")) {
      take();
      return out;
    }
    while (true) {
      SourcePos start = peek().span.begin;
      auto kind = int_keyword();
      if (!kind) fail(diag::kUnexpectedToken, "expected integer parameter type, found " + describe(peek()));
      take();
      Param p;
      p.kind = *kind;
      p.name = identifier("a parameter name");
      p.span = {start, last_end()};
      out.push_back(std::move(p));
      if (is_punct(",")) {
        take();
        continue;
      }
      expect_punct(")");
      return out;
    }
  }

  void closing_name(TypeDef& def) {
    expect_punct("}");
    def.name = identifier("a type name");
    expect_punct(";");
  }

  void struct_def(TypeDef& def) {
    optional_tag(def);
    if (is_punct("(")) def.params = params();
    expect_punct("{");
    StructBody body;
    while (!is_punct("}")) {
      if (at_end()) fail(diag::kUnterminated, "unterminated struct body");
      body.fields.push_back(field());
    }
    def.body = std::move(body);
    closing_name(def);
  }

  void casetype_def(TypeDef& def) {
    optional_tag(def);
    def.params = params();
    expect_punct("{");
    expect_keyword("switch");
    expect_punct("(");
    CasetypeBody body;
    body.scrutinee = expr();
    expect_punct(")");
    expect_punct("{");
    while (is_keyword("case")) {
      SourcePos start = peek().span.begin;
      take();
      CaseArm arm;
      arm.tag = integer("an integer case tag");
      expect_punct(":");
      arm.field = field();
      arm.span = {start, last_end()};
      body.cases.push_back(std::move(arm));
    }
    if (body.cases.empty()) fail(diag::kUnexpectedToken, "expected 'case', found " + describe(peek()));
    expect_punct("}");
    def.body = std::move(body);
    closing_name(def);
  }

  void enum_def(TypeDef& def, IntKind underlying) {
    optional_tag(def);
    expect_punct("{");
    EnumBody body;
    body.underlying = underlying;
    BigInt next = 0;
    while (!is_punct("}")) {
      SourcePos start = peek().span.begin;
      EnumConstant c;
      c.name = identifier("an enum constant name");
      if (is_punct("=")) {
        take();
        next = integer("an integer value");
      }
      c.value = next;
      next += 1;
      c.span = {start, last_end()};
      body.constants.push_back(std::move(c));
      if (!is_punct(",")) break;
      take();
    }
    if (body.constants.empty()) fail(diag::kUnexpectedToken, "expected an enum constant, found " + describe(peek()));
    def.body = std::move(body);
    closing_name(def);
  }

  // ---- fields ----

  FieldDecl field() {
    FieldDecl f;
    SourcePos start = peek().span.begin;
    f.type.span.begin = start;
    if (auto kind = int_keyword()) {
      take();
      f.type.kind = TypeRef::Kind::kInt;
      f.type.int_kind = *kind;
    } else if (is_keyword("unit")) {
      take();
      f.type.kind = TypeRef::Kind::kUnit;
    } else {
      f.type.kind = TypeRef::Kind::kNamed;
      f.type.name = identifier("a type name");
      if (is_punct("(")) {
        take();
        if (!is_punct(")")) {
          while (true) {
            f.type.args.push_back(expr());
            if (!is_punct(",")) break;
            take();
          }
        }
        expect_punct(")");
      }
    }
    f.type.span.end = last_end();
    f.name = identifier("a field name");

    if (is_punct(":")) {
      take();
      BigInt w = integer("a bit width");
      f.bitwidth = w > 1024 ? 1025 : w.convert_to<int>();
    } else if (is_punct("[")) {
      take();
      if (peek().kind == TokenKind::kConsumeAll) {
        take();
        f.array = ArrayForm::kConsumeAll;
      } else if (peek().kind == TokenKind::kByteSize) {
        take();
        f.array = ArrayForm::kByteSize;
        f.array_size = expr();
      } else {
        Expr size = expr();
        f.array = size.kind == Expr::Kind::kLiteral ? ArrayForm::kFixedBytes : ArrayForm::kByteSize;
        f.array_size = std::move(size);
      }
      expect_punct("]");
    }

    if (is_punct("{")) {
      take();
      f.constraint = expr();
      if (!is_punct("}")) {
        if (is_punct(";") || at_end()) fail(diag::kUnterminated, "unterminated constraint: expected '}'");
        fail(diag::kUnexpectedToken, "expected '}' after constraint, found " + describe(peek()));
      }
      take();
    }
    if (!is_punct(";")) fail(diag::kUnexpectedToken, "expected ';' after field, found " + describe(peek()));
    take();
    f.span = {start, last_end()};
    return f;
  }

  // ---- expressions (C precedence) ----

  Expr expr() { return binary(0); }

  Expr binary(int level) {
    static const std::vector<std::vector<std::pair<std::string_view, BinOp>>> kLevels = {
        {{"||", BinOp::kOr}},
        {{"&&", BinOp::kAnd}},
        {{"|", BinOp::kBitOr}},
        {{"^", BinOp::kBitXor}},
        {{"&", BinOp::kBitAnd}},
        {{"==", BinOp::kEq}, {"!=", BinOp::kNe}},
        {{"<", BinOp::kLt}, {"<=", BinOp::kLe}, {">", BinOp::kGt}, {">=", BinOp::kGe}},
        {{"<<", BinOp::kShl}, {">>", BinOp::kShr}},
        {{"+", BinOp::kAdd}, {"-", BinOp::kSub}},
        {{"*", BinOp::kMul}},
    };
    if (level == static_cast<int>(kLevels.size())) return unary();
    Expr lhs = binary(level + 1);
    while (true) {
      std::optional<BinOp> op;
      for (const auto& [sym, o] : kLevels[level]) {
        if (is_punct(sym)) op = o;
      }
      if (!op) return lhs;
      take();
      Expr rhs = binary(level + 1);
      SourceSpan span{lhs.span.begin, rhs.span.end};
      lhs = Expr::binary(*op, std::move(lhs), std::move(rhs), span);
    }
  }

  Expr unary() {
    if (is_punct("!")) {
      SourcePos start = take().span.begin;
      Expr inner = unary();
      SourceSpan span{start, inner.span.end};
      return Expr::negate(std::move(inner), span);
    }
    return primary();
  }

  Expr primary() {
    const Token& t = peek();
    if (t.kind == TokenKind::kInt) {
      take();
      return Expr::literal(t.value, t.span);
    }
    if (t.kind == TokenKind::kIdent || t.kind == TokenKind::kKeyword) {
      SourceSpan span = t.span;
      std::string name = identifier("an identifier");
      return Expr::ident(std::move(name), span);
    }
    if (is_punct("(")) {
      SourcePos start = take().span.begin;
      Expr inner = expr();
      expect_punct(")");
      inner.span = {start, last_end()};
      return inner;
    }
    fail(diag::kUnexpectedToken, "expected expression, found " + describe(t));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic> diags_;
};

}  // namespace

ParseResult parse_spec(std::string_view text, std::optional<std::string> entry) {
  std::vector<Diagnostic> diags;
  std::vector<Token> toks = tokenize(text, diags);
  if (!diags.empty()) return diags;
  Parser parser(std::move(toks));
  std::vector<TypeDef> defs;
  try {
    defs = parser.definitions();
  } catch (const ParseAbort&) {
    return parser.diags();
  }
  std::string entry_name = entry ? *entry : defs.back().name;
  return Spec(std::move(defs), std::move(entry_name));
}

ParseResult check(std::string_view text, std::optional<std::string> entry) {
  ParseResult parsed = parse_spec(text, std::move(entry));
  if (std::holds_alternative<std::vector<Diagnostic>>(parsed)) return parsed;
  std::vector<Diagnostic> diags = typecheck(std::get<Spec>(parsed));
  if (!diags.empty()) return diags;
  return parsed;
}

}  // namespace tdforge

#include <gtest/gtest.h>

#include <json.hpp>

#include "test_support.hpp"
#include "tdforge/frontend.hpp"

namespace tdforge {
namespace {

using testing::data_path;

std::vector<Diagnostic> diags_of(const std::string& text) {
  ParseResult r = check(text);
  auto* d = std::get_if<std::vector<Diagnostic>>(&r);
  return d ? *d : std::vector<Diagnostic>{};
}

bool has_code(const std::vector<Diagnostic>& ds, std::string_view code) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.code == code; });
}

const char* kMessage = R"(typedef struct _message {
  UINT8 first { first > 42 };
  UINT8 second;
} message;
)";

TEST(Parse, MessageSpec) {
  ParseResult r = parse_spec(kMessage);
  ASSERT_TRUE(std::holds_alternative<Spec>(r));
  const Spec& s = std::get<Spec>(r);
  ASSERT_EQ(s.defs().size(), 1u);
  const auto& body = std::get<StructBody>(s.defs()[0].body);
  ASSERT_EQ(body.fields.size(), 2u);
  EXPECT_EQ(body.fields[0].name, "first");
  EXPECT_TRUE(body.fields[0].constraint.has_value());
  EXPECT_FALSE(body.fields[1].constraint.has_value());
  EXPECT_EQ(s.entry(), "message");
}

TEST(Parse, EmptyInputExpectsTypedef) {
  ParseResult r = parse_spec("");
  ASSERT_TRUE(std::holds_alternative<std::vector<Diagnostic>>(r));
  const auto& d = std::get<std::vector<Diagnostic>>(r);
  ASSERT_FALSE(d.empty());
  EXPECT_EQ(d[0].code, "SYN001");
  EXPECT_NE(d[0].message.find("expected typedef"), std::string::npos);
}

TEST(Parse, OptionSpec) {
  ParseResult r = parse_spec(read_text_file(data_path("option.3d")));
  ASSERT_TRUE(std::holds_alternative<Spec>(r));
  const Spec& s = std::get<Spec>(r);
  int structs = 0, casetypes = 0;
  for (const auto& d : s.defs()) {
    structs += d.is_struct();
    casetypes += d.is_casetype();
  }
  EXPECT_EQ(structs, 2);
  EXPECT_EQ(casetypes, 1);
  EXPECT_EQ(s.entry(), "OPTION");
}

TEST(Typecheck, MessageOk) {
  ParseResult r = parse_spec(kMessage);
  EXPECT_TRUE(typecheck(std::get<Spec>(r)).empty());
}

TEST(Typecheck, BitfieldRunMustFillContainer) {
  auto d = diags_of("typedef struct _T { UINT16BE a:3; UINT16BE b:5; } T;");
  EXPECT_TRUE(has_code(d, diag::kBitfieldFill));
}

TEST(Typecheck, UnresolvedCasetypeArm) {
  auto d = diags_of(R"(
casetype _C(UINT8 k) { switch (k) { case 1: FOO f; } } C;
typedef struct _T { UINT8 k; C(k) c; } T;
)");
  EXPECT_TRUE(has_code(d, diag::kUnresolvedType));
}

TEST(Check, DanglingOperatorIsSyntaxError) {
  auto d = diags_of(R"(typedef struct _OPTION {
    UINT8 Kind { Kind == 0x00 | };
} OPTION;
)");
  ASSERT_FALSE(d.empty());
  EXPECT_EQ(d[0].code.substr(0, 3), "SYN");
}

TEST(Check, ReservedKeywordAsIdentifier) {
  auto d = diags_of(read_text_file(data_path("broken_candidates/broken.3d")));
  ASSERT_FALSE(d.empty());
  EXPECT_EQ(d[0].code, diag::kReservedKeyword);
  EXPECT_EQ(d[0].span.begin.line, 2);
  EXPECT_EQ(d[0].span.begin.column, 9);
}

TEST(Typecheck, MoreRules) {
  EXPECT_TRUE(has_code(diags_of("typedef struct _T { UINT8 a; UINT8 a; } T;"), diag::kDuplicate));
  EXPECT_TRUE(has_code(diags_of("typedef struct _T { UINT8 a { a + 1 }; } T;"), diag::kTypeMismatch));
  EXPECT_TRUE(has_code(diags_of("typedef struct _T { UINT8 a { b > 1 }; UINT8 b; } T;"), diag::kUnresolvedIdent));
  EXPECT_TRUE(has_code(diags_of("typedef struct _T { UINT8 d[:consume-all]; UINT8 x; } T;"),
                       diag::kConsumeAllTail));
  EXPECT_TRUE(has_code(diags_of("typedef struct _A { B b; } A;\ntypedef struct _B { A a; } B;"), diag::kRecursive));
  EXPECT_TRUE(has_code(diags_of(R"(
casetype _C(UINT8 k) { switch (k) { case 1: UINT8 x; case 1: UINT8 y; } } C;
typedef struct _T { UINT8 k; C(k) c; } T;
)"),
                       diag::kDuplicateCase));
  EXPECT_TRUE(has_code(diags_of("typedef struct _T { UINT16 d[4]; } T;"), diag::kArrayElement));
  EXPECT_TRUE(has_code(diags_of("UINT8 enum E { A = 300 } E;\ntypedef struct _T { E e; } T;"), diag::kEnumRange));
  EXPECT_TRUE(has_code(diags_of("typedef struct _T { UINT8 a:9; } T;"), diag::kBitwidth));
}

TEST(Check, EntryMustHaveNoParams) {
  auto d = diags_of("typedef struct _T(UINT8 n) { UINT8 a { a == n }; } T;");
  EXPECT_TRUE(has_code(d, diag::kEntry));
}

TEST(Check, EntryOverride) {
  ParseResult r = check(read_text_file(data_path("option.3d")), "MAX_SEG_SIZE");
  ASSERT_TRUE(std::holds_alternative<Spec>(r));
  EXPECT_EQ(std::get<Spec>(r).entry(), "MAX_SEG_SIZE");
}

TEST(Diagnostics, TextAndJsonFormats) {
  auto d = diags_of(read_text_file(data_path("broken_candidates/broken.3d")));
  ASSERT_FALSE(d.empty());
  EXPECT_EQ(format_diagnostic(d[0], "v.3d").rfind("v.3d:2:9: SYN004 ", 0), 0u);
  auto j = nlohmann::json::parse(diagnostics_to_json(d, "v.3d"));
  ASSERT_TRUE(j.is_array());
  EXPECT_EQ(j[0]["code"], "SYN004");
  EXPECT_EQ(j[0]["line"], 2);
}

const std::vector<std::string> kFixtures{"message.3d", "message_renamed.3d", "message_noconstraint.3d", "option.3d",
                                         "option_narrow.3d", "always_fail.3d", "udp.3d", "features.3d",
                                         "candidates/b_under.3d", "candidates/c_over.3d"};

// Property: same text, same diagnostics (codes, order, spans).
TEST(FrontendProperty, Deterministic) {
  const std::vector<std::string> texts{"", "typedef struct _T { UINT16BE a:3; UINT16BE b:5; } T;",
                                       read_text_file(data_path("broken_candidates/broken.3d")),
                                       "typedef struct _T { UINT8 a { b > 1 }; UINT8 a; X y; } T;"};
  for (const auto& t : texts) {
    auto a = diags_of(t), b = diags_of(t);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].code, b[i].code);
      EXPECT_EQ(a[i].message, b[i].message);
      EXPECT_EQ(a[i].span.begin.offset, b[i].span.begin.offset);
    }
  }
}

// Property: checked specs satisfy the data-model invariants, and printing
// then re-checking gives a structurally identical spec.
TEST(FrontendProperty, InvariantsAndRoundTrip) {
  for (const auto& f : kFixtures) {
    SCOPED_TRACE(f);
    Spec s = testing::load_spec(f);
    EXPECT_TRUE(invariant_violations(s).empty());
    std::string printed = print_spec(s);
    ParseResult again = check(printed);
    ASSERT_TRUE(std::holds_alternative<Spec>(again)) << printed;
    EXPECT_TRUE(same_structure(s, std::get<Spec>(again))) << printed;
    EXPECT_EQ(print_spec(std::get<Spec>(again)), printed);
  }
}

TEST(Lexer, Tokens) {
  std::vector<Diagnostic> d;
  auto toks = tokenize("UINT8 d[:consume-all]; /* c */ x >= 0x1F // t\n", d);
  EXPECT_TRUE(d.empty());
  ASSERT_GE(toks.size(), 9u);
  EXPECT_EQ(toks[0].kind, TokenKind::kKeyword);
  EXPECT_EQ(toks[3].kind, TokenKind::kConsumeAll);
  EXPECT_EQ(toks[8].value, 31);
  EXPECT_EQ(toks.back().kind, TokenKind::kEnd);
}

TEST(Lexer, BadCharacterAndLiteral) {
  std::vector<Diagnostic> d;
  tokenize("UINT8 x @", d);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].code, diag::kBadCharacter);
  d.clear();
  tokenize("0x1FFFFFFFFFFFFFFFF", d);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].code, diag::kBadLiteral);
}

TEST(Lexer, ReservedWords) {
  for (const char* w : {"typedef", "struct", "casetype", "switch", "case", "enum", "unit", "UINT8", "UINT64BE", "type"}) {
    EXPECT_TRUE(is_reserved_word(w)) << w;
  }
  EXPECT_FALSE(is_reserved_word("Kind"));
}

}  // namespace
}  // namespace tdforge

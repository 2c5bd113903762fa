#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tdforge/interp.hpp"

namespace tdforge {
namespace {

using testing::load_spec;

ParseOutcome parse_entry(const Spec& s, const Bytes& b) {
  return parse_type(s, s.entry(), {}, b, 0);
}

TEST(ParseType, MessageSuccess) {
  ParseOutcome o = parse_entry(load_spec("message.3d"), {0x2B, 0x00});
  ASSERT_TRUE(o.succeeded());
  EXPECT_EQ(o.success().consumed, 2u);
  ASSERT_NE(o.binding("first"), nullptr);
  EXPECT_EQ(*o.binding("first"), 43);
  EXPECT_EQ(*o.binding("second"), 0);
  EXPECT_EQ(describe(o), "Success consumed=2 first=43 second=0");
}

TEST(ParseType, MessageConstraintViolated) {
  ParseOutcome o = parse_entry(load_spec("message.3d"), {0x2A, 0x00});
  ASSERT_FALSE(o.succeeded());
  EXPECT_EQ(o.failure().reason, FailureReason::kConstraintViolated);
  EXPECT_EQ(o.failure().where, "first");
  EXPECT_EQ(o.failure().offset, 1u);
}

TEST(ParseType, MessageInsufficientInput) {
  ParseOutcome o = parse_entry(load_spec("message.3d"), {0x2B});
  ASSERT_FALSE(o.succeeded());
  EXPECT_EQ(o.failure().reason, FailureReason::kInsufficientInput);
  EXPECT_EQ(o.failure().offset, 1u);
}

TEST(ParseType, OptionMaxSegSize) {
  ParseOutcome o = parse_entry(load_spec("option.3d"), {0x02, 0x04, 0x05, 0xB4});
  ASSERT_TRUE(o.succeeded());
  EXPECT_EQ(o.success().consumed, 4u);
  ASSERT_NE(o.binding("payload.case2.MaxSegSize"), nullptr);
  EXPECT_EQ(*o.binding("payload.case2.MaxSegSize"), 1460);
  EXPECT_EQ(*o.binding("payload.case2.Length"), 4);
}

TEST(ParseType, OptionUnitCasesConsumeNothing) {
  const Spec s = load_spec("option.3d");
  for (std::uint8_t k : {0, 1}) {
    ParseOutcome o = parse_entry(s, {k});
    ASSERT_TRUE(o.succeeded());
    EXPECT_EQ(o.success().consumed, 1u);
  }
  ParseOutcome bad = parse_entry(s, {0x03});
  ASSERT_FALSE(bad.succeeded());
  EXPECT_EQ(bad.failure().reason, FailureReason::kConstraintViolated);
}

TEST(ParseType, ParameterizedTypeDirectly) {
  const Spec s = load_spec("option.3d");
  std::vector<BigInt> args{7};
  ParseOutcome o = parse_type(s, "OPTION_OF_KIND", args, Bytes{}, 0);
  ASSERT_FALSE(o.succeeded());
  EXPECT_EQ(o.failure().reason, FailureReason::kNoCaseMatched);
  EXPECT_EQ(o.failure().where, "OPTION_OF_KIND");
}

TEST(ParseType, ByteSizeArrayUnderflowFails) {
  const Spec s = load_spec("udp.3d");
  // Length 4 < 8: the constraint fails before the array length underflows.
  ParseOutcome o = parse_entry(s, {0, 1, 0, 2, 0, 4, 0, 0});
  ASSERT_FALSE(o.succeeded());
  EXPECT_EQ(o.failure().reason, FailureReason::kConstraintViolated);
  EXPECT_EQ(o.failure().where, "Length");
  ParseOutcome ok = parse_entry(s, {0, 1, 0, 2, 0, 10, 0, 0, 0xAA, 0xBB});
  ASSERT_TRUE(ok.succeeded());
  EXPECT_EQ(ok.success().consumed, 10u);
  EXPECT_EQ(*ok.binding("Data"), 2);
}

TEST(ParseType, EnumBitfieldCasetypeFeatures) {
  const Spec s = load_spec("features.3d");
  // c = GREEN (0x2A); flags 0b101_0_0011; body tag 0x2A -> one byte; rest.
  ParseOutcome o = parse_entry(s, {0x2A, 0xA3, 0x07, 0x01, 0x02});
  ASSERT_TRUE(o.succeeded()) << describe(o);
  EXPECT_EQ(*o.binding("f.hi"), 5);
  EXPECT_EQ(*o.binding("f.mid"), 0);
  EXPECT_EQ(*o.binding("f.lo"), 3);
  EXPECT_EQ(*o.binding("body.one"), 7);
  EXPECT_EQ(*o.binding("rest"), 2);
  // Enum membership.
  ParseOutcome e = parse_entry(s, {0x01, 0x00});
  ASSERT_FALSE(e.succeeded());
  EXPECT_EQ(e.failure().reason, FailureReason::kEnumOutOfRange);
  // hi == 7 and mid == 1 violates the bitfield constraint.
  ParseOutcome b = parse_entry(s, {0x2A, 0xF0, 0x00});
  ASSERT_FALSE(b.succeeded());
  EXPECT_EQ(b.failure().reason, FailureReason::kConstraintViolated);
  EXPECT_EQ(b.failure().where, "f.mid");
  // RED selects no case.
  ParseOutcome n = parse_entry(s, {0x00, 0x00});
  ASSERT_FALSE(n.succeeded());
  EXPECT_EQ(n.failure().reason, FailureReason::kNoCaseMatched);
  // Little-endian case arm.
  ParseOutcome le = parse_entry(s, {0x2B, 0x00, 0x34, 0x12});
  ASSERT_TRUE(le.succeeded());
  EXPECT_EQ(*le.binding("body.le"), 0x1234);
}

TEST(Validate, StrictAndPrefixModes) {
  const Spec s = load_spec("message.3d");
  EXPECT_TRUE(validate(s, Bytes{0x2B, 0x00}, AcceptMode::kStrict).accepted);
  Validation trailing = validate(s, Bytes{0x2B, 0x00, 0x00}, AcceptMode::kStrict);
  EXPECT_FALSE(trailing.accepted);
  ASSERT_FALSE(trailing.outcome.succeeded());
  EXPECT_EQ(trailing.outcome.failure().reason, FailureReason::kTrailingBytes);
  EXPECT_TRUE(validate(s, Bytes{0x2B, 0x00, 0x00}, AcceptMode::kPrefix).accepted);
  Validation empty = validate(s, Bytes{}, AcceptMode::kStrict);
  EXPECT_FALSE(empty.accepted);
  EXPECT_EQ(empty.outcome.failure().reason, FailureReason::kInsufficientInput);
  EXPECT_EQ(empty.outcome.failure().offset, 0u);
}

const std::vector<std::string> kSpecs{"message.3d", "option.3d", "udp.3d", "features.3d", "always_fail.3d"};

// Property: an InsufficientInput failure on b is reproduced identically on
// every prefix of b that still runs out of input.
TEST(InterpProperty, InsufficientInputPrefixMonotone) {
  for (const auto& f : kSpecs) {
    SCOPED_TRACE(f);
    const Spec s = load_spec(f);
    for (const Bytes& b : testing::all_inputs(5)) {
      ParseOutcome o = parse_entry(s, b);
      if (o.succeeded() || o.failure().reason != FailureReason::kInsufficientInput) continue;
      for (std::size_t n = 0; n < b.size(); ++n) {
        ParseOutcome p = parse_entry(s, Bytes(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n)));
        ASSERT_FALSE(p.succeeded());
        EXPECT_EQ(p.failure().reason, FailureReason::kInsufficientInput);
        // A shorter input fails no later than the longer one.
        EXPECT_LE(p.failure().offset, o.failure().offset);
      }
    }
  }
}

// Property: determinism and outcome bounds.
TEST(InterpProperty, DeterministicAndBounded) {
  for (const auto& f : kSpecs) {
    const Spec s = load_spec(f);
    for (const Bytes& b : testing::all_inputs(4)) {
      for (AcceptMode m : {AcceptMode::kStrict, AcceptMode::kPrefix}) {
        Validation a = validate(s, b, m), c = validate(s, b, m);
        EXPECT_EQ(a.accepted, c.accepted);
        EXPECT_TRUE(a.outcome == c.outcome);
        if (a.outcome.succeeded()) {
          EXPECT_LE(a.outcome.success().consumed, b.size());
        } else {
          EXPECT_LE(a.outcome.failure().offset, b.size());
        }
        if (m == AcceptMode::kStrict) {
          EXPECT_EQ(a.accepted, a.outcome.succeeded() && a.outcome.success().consumed == b.size());
        }
      }
    }
  }
}

}  // namespace
}  // namespace tdforge

#include <gtest/gtest.h>

#include <fstream>

#include <json.hpp>

#include "test_support.hpp"
#include "tdforge/refine.hpp"

namespace tdforge {
namespace {

using testing::data_path;
using testing::load_spec;

LoopConfig config() {
  LoopConfig cfg;
  cfg.gen.solver = testing::solver_config();
  cfg.diff.solver = testing::solver_config();
  return cfg;
}

class ListProvider : public CandidateProvider {
 public:
  explicit ListProvider(std::vector<Candidate> c) : c_(std::move(c)) {}
  std::optional<Candidate> next_candidate(const std::string& log) override {
    logs.push_back(log);
    if (i_ == c_.size()) return std::nullopt;
    return c_[i_++];
  }
  std::vector<std::string> logs;

 private:
  std::vector<Candidate> c_;
  std::size_t i_ = 0;
};

std::vector<nlohmann::json> records(const LoopResult& r) {
  std::vector<nlohmann::json> out;
  for (const auto& rec : r.log) out.push_back(nlohmann::json::parse(rec.to_json_line()));
  return out;
}

TEST(RunLoop, UdpCandidatesConvergeToCorrect) {
  DirectoryProvider provider(data_path("candidates"));
  GoldenSpecLabeler labeler(load_spec("udp.3d"), AcceptMode::kStrict);
  LoopResult r = run_loop(provider, labeler, {}, {}, config());
  ASSERT_EQ(r.survivors.size(), 1u);
  EXPECT_EQ(r.survivors[0].name, "a_correct");
  auto recs = records(r);
  std::map<std::string, int> failing;
  for (const auto& j : recs) {
    if (j["kind"] == "failing-test") ++failing[j["candidate"].get<std::string>()];
  }
  EXPECT_EQ(failing, (std::map<std::string, int>{{"b_under", 1}, {"c_over", 1}}));
  EXPECT_TRUE(postcondition_violations(r, AcceptMode::kStrict).empty());
  EXPECT_FALSE(r.budget_hit);
  EXPECT_FALSE(r.positives.empty());
  EXPECT_FALSE(r.negatives.empty());
}

TEST(RunLoop, BrokenCandidateLogsSyntaxError) {
  DirectoryProvider provider(data_path("broken_candidates"));
  GoldenSpecLabeler labeler(load_spec("udp.3d"), AcceptMode::kStrict);
  LoopResult r = run_loop(provider, labeler, {}, {}, config());
  EXPECT_TRUE(r.survivors.empty());
  auto recs = records(r);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0]["kind"], "syntax-error");
  EXPECT_EQ(recs[0]["candidate"], "broken");
  EXPECT_EQ(recs[0]["diagnostics"][0]["code"], "SYN004");
}

TEST(RunLoop, EmptyProviderReturnsSeeds) {
  ListProvider provider({});
  GoldenSpecLabeler labeler(load_spec("message.3d"), AcceptMode::kStrict);
  std::vector<Bytes> pos{{0x2B, 0x00}}, neg{{0x2A, 0x00}};
  LoopResult r = run_loop(provider, labeler, pos, neg, config());
  EXPECT_TRUE(r.survivors.empty());
  EXPECT_EQ(r.positives, pos);
  EXPECT_EQ(r.negatives, neg);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.rounds, 1);
}

TEST(RunLoop, InconsistentSeedIsConfigurationError) {
  ListProvider provider({});
  GoldenSpecLabeler labeler(load_spec("message.3d"), AcceptMode::kStrict);
  try {
    run_loop(provider, labeler, {{0x2A, 0x00}}, {}, config());
    FAIL() << "expected RefineError";
  } catch (const RefineError& e) {
    EXPECT_NE(std::string(e.what()).find("2a00"), std::string::npos);
  }
}

TEST(RunLoop, SeedsContainedAndDuplicatesIgnored) {
  const std::string msg = read_text_file(data_path("message.3d"));
  ListProvider provider({{"one", msg}, {"two", msg}, {"loose", read_text_file(data_path("message_noconstraint.3d"))}});
  GoldenSpecLabeler labeler(load_spec("message.3d"), AcceptMode::kStrict);
  std::vector<Bytes> pos{{0x2B, 0x00}}, neg{{0x2B}};
  LoopResult r = run_loop(provider, labeler, pos, neg, config());
  ASSERT_EQ(r.survivors.size(), 1u);
  EXPECT_EQ(r.survivors[0].name, "one");
  EXPECT_NE(std::find(r.positives.begin(), r.positives.end(), pos[0]), r.positives.end());
  EXPECT_NE(std::find(r.negatives.begin(), r.negatives.end(), neg[0]), r.negatives.end());
  EXPECT_TRUE(postcondition_violations(r, AcceptMode::kStrict).empty());
  // The provider sees the log grow: after the loose candidate is pruned the
  // final request carries its failing-test record.
  ASSERT_FALSE(provider.logs.empty());
  EXPECT_NE(provider.logs.back().find("\"candidate\":\"loose\""), std::string::npos);
}

TEST(RunLoop, LogIsReproducible) {
  auto once = [] {
    DirectoryProvider provider(data_path("candidates"));
    GoldenSpecLabeler labeler(load_spec("udp.3d"), AcceptMode::kStrict);
    return run_loop(provider, labeler, {}, {}, config());
  };
  LoopResult a = once(), b = once();
  EXPECT_EQ(a.log_jsonl(), b.log_jsonl());
  EXPECT_EQ(a.positives, b.positives);
  EXPECT_EQ(a.negatives, b.negatives);
}

TEST(RunLoop, MaxRoundsBudget) {
  std::vector<Candidate> many;
  for (int i = 0; i < 5; ++i) {
    many.push_back({"c" + std::to_string(i), "typedef struct _T { UINT8 x { x > " + std::to_string(i) + " }; } T;"});
  }
  ListProvider provider(many);
  GoldenSpecLabeler labeler(testing::spec_from_text("typedef struct _T { UINT8 x { x > 0 }; } T;"),
                            AcceptMode::kStrict);
  LoopConfig cfg = config();
  cfg.max_rounds = 2;
  LoopResult r = run_loop(provider, labeler, {}, {}, cfg);
  EXPECT_TRUE(r.budget_hit);
  EXPECT_EQ(r.rounds, 2);
  EXPECT_TRUE(postcondition_violations(r, AcceptMode::kStrict).empty());
}

TEST(LabelInputs, Examples) {
  GoldenSpecLabeler labeler(load_spec("message.3d"), AcceptMode::kStrict);
  LabelAdditions a = label_inputs({{0x2B, 0x00}, {0x2A, 0x00}}, labeler, {}, {});
  EXPECT_EQ(a.positives, (std::vector<Bytes>{{0x2B, 0x00}}));
  EXPECT_EQ(a.negatives, (std::vector<Bytes>{{0x2A, 0x00}}));
  LabelAdditions none = label_inputs({}, labeler, {}, {});
  EXPECT_TRUE(none.positives.empty() && none.negatives.empty());
  LabelAdditions dup = label_inputs({{0x2B, 0x00}, {0x2B, 0x00}}, labeler, {{0x2B, 0x00}}, {});
  EXPECT_TRUE(dup.positives.empty());
}

TEST(CommandLabeler, ExitCodes) {
  // Positive iff the first byte is above 0x2a.
  CommandLabeler labeler("b=$(od -An -tu1 -N1 | tr -d ' '); [ -n \"$b\" ] && [ \"$b\" -gt 42 ]",
                         std::chrono::seconds(10));
  EXPECT_EQ(labeler.label({0x2B}), Label::kPositive);
  EXPECT_EQ(labeler.label({0x2A}), Label::kNegative);
  EXPECT_EQ(labeler.label({}), Label::kNegative);
  CommandLabeler missing("/nonexistent/labeler", std::chrono::seconds(10));
  EXPECT_THROW(missing.label({1}), LabelerFailure);
  CommandLabeler slow("sleep 5", std::chrono::milliseconds(50));
  EXPECT_THROW(slow.label({1}), LabelerFailure);
}

TEST(LabelInputs, LabelerFailureSkipsWithWarning) {
  CommandLabeler missing("/nonexistent/labeler", std::chrono::seconds(10));
  LabelAdditions a = label_inputs({{1}}, missing, {}, {});
  EXPECT_TRUE(a.positives.empty() && a.negatives.empty());
  ASSERT_EQ(a.warnings.size(), 1u);
  EXPECT_EQ(a.warnings[0].kind, LogRecord::Kind::kLabelerWarning);
}

TEST(CommandProvider, ReadsCandidatesUntilEmpty) {
  auto dir = testing::fresh_temp_dir("provider");
  const auto counter = dir / "n";
  // Emits the message spec on the first call, then nothing.
  const std::string cmd = "cat >/dev/null; if [ -f '" + counter.string() + "' ]; then exit 0; fi; touch '" +
                          counter.string() + "'; cat '" + data_path("message.3d").string() + "'";
  CommandProvider provider(cmd, std::chrono::seconds(10));
  auto first = provider.next_candidate("");
  ASSERT_TRUE(first.has_value());
  EXPECT_EQ(first->name, "candidate-1");
  EXPECT_EQ(first->text, read_text_file(data_path("message.3d")));
  EXPECT_FALSE(provider.next_candidate("").has_value());
  CommandProvider failing("exit 4", std::chrono::seconds(10));
  EXPECT_THROW(failing.next_candidate(""), ProviderFailure);
  std::filesystem::remove_all(dir);
}

TEST(RunLoop, ProviderFailureKeepsState) {
  CommandProvider failing("exit 4", std::chrono::seconds(10));
  GoldenSpecLabeler labeler(load_spec("message.3d"), AcceptMode::kStrict);
  try {
    run_loop(failing, labeler, {{0x2B, 0x00}}, {}, config());
    FAIL() << "expected RefineError";
  } catch (const RefineError& e) {
    EXPECT_EQ(e.partial.positives, (std::vector<Bytes>{{0x2B, 0x00}}));
  }
}

TEST(WriteLoopOutput, Layout) {
  DirectoryProvider provider(data_path("candidates"));
  GoldenSpecLabeler labeler(load_spec("udp.3d"), AcceptMode::kStrict);
  LoopResult r = run_loop(provider, labeler, {}, {}, config());
  auto dir = testing::fresh_temp_dir("loop-out");
  write_loop_output(dir, r);
  EXPECT_TRUE(std::filesystem::exists(dir / "survivors" / "a_correct.3d"));
  EXPECT_FALSE(std::filesystem::exists(dir / "survivors" / "b_under.3d"));
  auto manifest = read_manifest(dir / "manifest.json");
  EXPECT_EQ(manifest.size(), r.positives.size() + r.negatives.size());
  EXPECT_EQ(read_text_file(dir / "state-log.jsonl"), r.log_jsonl());
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace tdforge

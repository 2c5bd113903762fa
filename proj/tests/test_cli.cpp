#include <gtest/gtest.h>

#include <json.hpp>

#include "test_support.hpp"

namespace tdforge {
namespace {

using testing::data_path;
using testing::run_cli;

std::string path(const std::string& name) { return data_path(name).string(); }

int code(const CommandResult& r) {
  EXPECT_TRUE(r.status.exited) << r.status.describe();
  return r.status.code;
}

TEST(Cli, Version) {
  auto r = run_cli({"--version"});
  EXPECT_EQ(code(r), 0);
  EXPECT_NE(r.out.find("tdforge 0.1.0"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(code(run_cli({"--bogus", "check", path("message.3d")})), 2);
  EXPECT_EQ(code(run_cli({})), 2);
  EXPECT_EQ(code(run_cli({"--mode", "lenient", "check", path("message.3d")})), 2);
  EXPECT_EQ(code(run_cli({"run", path("message.3d"), "--hex", "2"})), 2);
}

TEST(Cli, Check) {
  auto ok = run_cli({"check", path("message.3d")});
  EXPECT_EQ(code(ok), 0);
  EXPECT_NE(ok.out.find("ok"), std::string::npos);
  auto bad = run_cli({"check", path("broken_candidates/broken.3d")});
  EXPECT_EQ(code(bad), 1);
  EXPECT_NE(bad.err.find("SYN004"), std::string::npos);
  auto js = run_cli({"check", "--json", path("broken_candidates/broken.3d")});
  EXPECT_EQ(code(js), 1);
  auto j = nlohmann::json::parse(js.out);
  EXPECT_EQ(j[0]["code"], "SYN004");
  EXPECT_EQ(code(run_cli({"check", "/nonexistent/spec.3d"})), 3);
}

TEST(Cli, Run) {
  auto acc = run_cli({"run", path("message.3d"), "--hex", "2b00"});
  EXPECT_EQ(code(acc), 0);
  EXPECT_NE(acc.out.find("accepted: Success consumed=2"), std::string::npos);
  auto rej = run_cli({"run", path("message.3d"), "--hex", "2a00"});
  EXPECT_EQ(code(rej), 1);
  EXPECT_NE(rej.out.find("rejected: Failure ConstraintViolated(first)"), std::string::npos);

  auto dir = testing::fresh_temp_dir("cli-run");
  write_text_file(dir / "p.bin", std::string("\x2b\x00\x01", 3));
  EXPECT_EQ(code(run_cli({"run", path("message.3d"), (dir / "p.bin").string()})), 1);
  EXPECT_EQ(code(run_cli({"--mode", "prefix", "run", path("message.3d"), (dir / "p.bin").string()})), 0);
  std::filesystem::remove_all(dir);

  auto traced = run_cli({"run", path("option.3d"), "--hex", "020405b4", "--trace"});
  EXPECT_EQ(code(traced), 0);
  EXPECT_NE(traced.out.find("trace: b0=0 b1=2"), std::string::npos) << traced.out;
}

TEST(Cli, DumpSmt) {
  auto r = run_cli({"dump-smt", path("message.3d")});
  EXPECT_EQ(code(r), 0);
  EXPECT_NE(r.out.find("(assert (not (has-failed (parse-message init))))"), std::string::npos) << r.out;
  auto ir = run_cli({"dump-smt", "--ir", path("option.3d")});
  EXPECT_EQ(code(ir), 0);
  EXPECT_EQ(ir.out, read_text_file(std::filesystem::path(TDFORGE_TEST_GOLDEN) / "option.ir"));
  EXPECT_EQ(code(run_cli({"dump-smt", "--query", "diff", path("message.3d")})), 2);
}

TEST(Cli, GenWritesCorpus) {
  auto dir = testing::fresh_temp_dir("cli-gen");
  auto r = run_cli({"--seed-note", "cli-test", "gen", path("message.3d"), "--out", dir.string()});
  EXPECT_EQ(code(r), 0) << r.out << r.err;
  EXPECT_NE(r.out.find("generated "), std::string::npos);
  ASSERT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  ASSERT_TRUE(std::filesystem::exists(dir / "coverage.json"));
  auto packets = read_manifest(dir / "manifest.json");
  EXPECT_FALSE(packets.empty());
  Spec spec = testing::load_spec("message.3d");
  for (const auto& p : packets) {
    EXPECT_EQ(validate(spec, p.bytes, AcceptMode::kStrict).accepted, p.label == Label::kPositive) << p.id;
    EXPECT_EQ(p.note, "cli-test");
  }
  auto cov = nlohmann::json::parse(read_text_file(dir / "coverage.json"));
  EXPECT_FALSE(cov["incomplete"].get<bool>());
  std::filesystem::remove_all(dir);
}

TEST(Cli, GenTimeoutIsInconclusive) {
  auto r = run_cli({"--timeout-secs", "0.001", "gen", path("option.3d")});
  EXPECT_EQ(code(r), 20) << r.out << r.err;
}

TEST(Cli, DiffAndEquiv) {
  EXPECT_EQ(code(run_cli({"diff", path("message.3d"), path("message_renamed.3d")})), 0);
  auto d = run_cli({"diff", path("message_noconstraint.3d"), path("message.3d")});
  EXPECT_EQ(code(d), 10);
  EXPECT_NE(d.out.find("left:  Success"), std::string::npos) << d.out;
  EXPECT_EQ(code(run_cli({"equiv", path("message.3d"), path("message_renamed.3d")})), 0);
  auto e = run_cli({"equiv", path("message.3d"), path("message_noconstraint.3d")});
  EXPECT_EQ(code(e), 11);
  EXPECT_NE(e.out.find("RightPermissive"), std::string::npos);
}

TEST(Cli, Refine) {
  auto dir = testing::fresh_temp_dir("cli-refine");
  auto r = run_cli({"refine", "--candidates", path("candidates"), "--labeler-spec", path("udp.3d"), "--out",
                    dir.string()});
  EXPECT_EQ(code(r), 0) << r.out << r.err;
  EXPECT_NE(r.out.find("survivors: a_correct\n"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(dir / "survivors" / "a_correct.3d"));
  EXPECT_TRUE(std::filesystem::exists(dir / "state-log.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));

  auto none = run_cli({"refine", "--candidates", path("broken_candidates"), "--labeler-spec", path("udp.3d")});
  EXPECT_EQ(code(none), 1);
  EXPECT_EQ(code(run_cli({"refine", "--labeler-spec", path("udp.3d")})), 2);
  auto failing = run_cli({"refine", "--provider-cmd", "exit 5", "--labeler-spec", path("udp.3d")});
  EXPECT_EQ(code(failing), 3);
  std::filesystem::remove_all(dir);
}

TEST(Cli, SolverCrashIsIoExit) {
  auto r = run_command({testing::cli_path(), "--solver", "/nonexistent/solver", "gen", path("message.3d")}, "",
                       std::chrono::minutes(1));
  EXPECT_EQ(code(r), 3) << r.err;
}

}  // namespace
}  // namespace tdforge

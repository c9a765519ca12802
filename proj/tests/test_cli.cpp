#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "basecamp/sentinel/select.hpp"
#include "support/cli_run.hpp"

namespace fs = std::filesystem;
using basecamp::testing::CliResult;
using basecamp::testing::quote;
using basecamp::testing::slurp;
using json = nlohmann::ordered_json;

namespace {

const std::string cli = BASECAMP_CLI;
const std::string src = BASECAMP_SOURCE_DIR;

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("basecamp_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const fs::path& scratch() {
  static const fs::path d = fresh_dir("scratch");
  return d;
}

CliResult run(const std::string& args, const fs::path& dir = scratch()) {
  return basecamp::testing::run_cli(cli, args, dir);
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST(Cli, HelpForEverySubcommand) {
  const std::map<std::string, std::vector<std::string>> flags = {
      {"compile", {"--emit", "--format", "--out"}},
      {"graph", {"--out", "--costs"}},
      {"plan", {"--dfg", "--platform", "--objective", "--out"}},
      {"simulate", {"--plan", "--cluster", "--tasks", "--seed", "--trace"}},
      {"tune", {"--cluster", "--tasks", "--iterations", "--noise", "--seed"}},
      {"detect", {"--data", "--labels", "--budget-trials", "--out", "--serve"}},
      {"run", {"--inputs", "--seed"}},
  };
  for (const auto& [cmd, names] : flags) {
    auto r = run(cmd + " --help");
    EXPECT_EQ(r.code, 0) << cmd;
    for (const auto& f : names) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " lacks " << f;
  }
  auto top = run("--help");
  EXPECT_EQ(top.code, 0);
  for (const auto& [cmd, names] : flags) EXPECT_NE(top.out.find(cmd), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwoWithSynopsis) {
  for (std::string args : {"", "frobnicate", "compile", "compile x.ekl --bogus", "plan --dfg a.json",
                           "compile x.ekl --emit asm", "detect --budget-trials 3 --budget-seconds 1"}) {
    auto r = run(args);
    EXPECT_EQ(r.code, 2) << args;
    EXPECT_NE(r.err.find("Usage:"), std::string::npos) << args;
    EXPECT_TRUE(r.out.empty()) << args;
  }
}

TEST(Cli, CompileEmitsIrJson) {
  auto r = run("compile " + quote(src + "/demos/major_absorber.ekl") + " --emit ir");
  ASSERT_EQ(r.code, 0) << r.err;
  json j = json::parse(r.out);
  EXPECT_TRUE(j.contains("tensors"));
}

TEST(Cli, CompileDiagnosticsCarrySpans) {
  fs::path d = fresh_dir("diag");
  write(d / "bad.ekl", "index i : 4;\ntensor a : [4];\nb[i] = a[i] +\n");
  auto r = run("compile bad.ekl", d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.ekl:"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_NE(r.err.find('^'), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  fs::remove_all(d);
}

TEST(Cli, MissingInputIsADiagnostic) {
  auto r = run("graph /nonexistent/none.cdr");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cannot read"), std::string::npos);
}

TEST(Cli, GraphOfMapMatchingHasFourCallNodes) {
  fs::path d = fresh_dir("graph");
  auto r = run("graph " + quote(src + "/demos/mapmatch.cdr") + " --out dfg.json", d);
  ASSERT_EQ(r.code, 0) << r.err;
  json g = json::parse(slurp(d / "dfg.json"));
  int calls = 0;
  for (const auto& n : g["nodes"]) calls += n["callee"] != "clone";
  EXPECT_EQ(calls, 4);
  fs::remove_all(d);
}

TEST(Cli, PlanWithoutCostsReportsConstraint) {
  fs::path d = fresh_dir("nocost");
  ASSERT_EQ(run("graph " + quote(src + "/demos/mapmatch.cdr") + " --out dfg.json", d).code, 0);
  auto r = run("plan --dfg dfg.json --platform " + quote(src + "/demos/platform.json"), d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cost"), std::string::npos) << r.err;
  fs::remove_all(d);
}

TEST(Cli, PipelineRerunsAreByteIdentical) {
  fs::path a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  for (const auto& step : basecamp::testing::demo_pipeline(src)) {
    auto ra = run(step.args, a), rb = run(step.args, b);
    ASSERT_EQ(ra.code, 0) << step.name << ": " << ra.err;
    ASSERT_EQ(rb.code, 0) << step.name << ": " << rb.err;
    EXPECT_EQ(ra.out, rb.out) << step.name;
    for (const auto& f : step.artifacts) {
      ASSERT_TRUE(fs::exists(a / f)) << f;
      EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
  }
  EXPECT_EQ(slurp(a / "major_absorber.c"), slurp(src + "/tests/golden/major_absorber_fixed8_8.c"));
  json report = json::parse(slurp(a / "report.json"));
  EXPECT_EQ(basecamp::sentinel::check_report_schema(report, 400), "");
  json summary = json::parse(slurp(a / "summary.json"));
  EXPECT_TRUE(summary["unfinished"].empty());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, DetectWithoutLabelsWarns) {
  auto r = run("detect --data " + quote(src + "/demos/anomaly/series.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  json j = json::parse(r.out);
  EXPECT_TRUE(j["score"].is_null());
  EXPECT_EQ(j["model"]["selection"]["mode"], "default");
}

TEST(Cli, DetectServeSpeaksJsonLines) {
  fs::path d = fresh_dir("serve");
  std::vector<double> x(40, 1.0);
  x[30] = 9;
  json sel = {{"cmd", "select"}, {"data", x}, {"labels", {30}}, {"trials", 10}, {"seed", 1}};
  write(d / "in.jsonl", sel.dump() + "\n" + json({{"cmd", "detect"}, {"data", x}}).dump() + "\n{oops\n");
  auto r = basecamp::testing::run_cli(cli, "detect --serve", d, (d / "in.jsonl").string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<json> got;
  while (std::getline(lines, line)) got.push_back(json::parse(line));
  ASSERT_EQ(got.size(), 3u);
  EXPECT_TRUE(got[0]["ok"].get<bool>());
  EXPECT_EQ(got[1]["report"]["anomalies"], json::array({30}));
  EXPECT_FALSE(got[2]["ok"].get<bool>());
  fs::remove_all(d);
}

TEST(Cli, RunMatchesAcrossSeeds) {
  std::string args = "run " + quote(src + "/demos/mapmatch.cdr") + " --inputs " + quote(src + "/demos/mapmatch");
  auto first = run(args + " --seed 1");
  ASSERT_EQ(first.code, 0) << first.err;
  for (int seed : {2, 3, 99}) EXPECT_EQ(run(args + " --seed " + std::to_string(seed)).out, first.out);
}

TEST(Cli, SimulateReportsUnfinishedWork) {
  fs::path d = fresh_dir("unfinished");
  write(d / "cluster.json", R"({"nodes":[{"id":"f","kind":"fpga","cores":0,"vf_count":1,"bandwidth":100,"latency":0},
    {"id":"c","kind":"cpu","cores":1,"bandwidth":100,"latency":0}],"failures":[{"time":1,"node":"f"}]})");
  write(d / "tasks.json", R"({"tasks":[{"id":"k","request":"fpga","fpga_us":10}]})");
  auto r = run("simulate --cluster cluster.json --tasks tasks.json", d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("\"unfinished\":[\"k\"]"), std::string::npos) << r.out;
  fs::remove_all(d);
}

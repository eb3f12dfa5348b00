#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "keysig/keysig.hpp"
#include "support/synthetic.hpp"

using namespace keysig;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("keysig_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Result run(const std::vector<std::string>& args) const {
    std::string cmd = quote(KEYSIG_CLI);
    for (const auto& a : args) cmd += " " + quote(a);
    const auto out = path("stdout.txt"), err = path("stderr.txt");
    cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
  }

  fs::path write_dataset(std::size_t n) const {
    const auto p = path("data.jsonl");
    std::string content;
    for (const auto& rec : synth::to_dataset(synth::planted_corpus(n, 3)).records)
      content += dump_line(to_json(rec));
    write_file(p, content);
    return p;
  }

  fs::path dir_;
};

const fs::path kGolden = fs::path(KEYSIG_TEST_DIR) / "golden";

}  // namespace

TEST_F(Cli, HelpMatchesGoldens) {
  for (const std::string sub : {"", "label", "extract", "oracle", "run", "run-two-stage", "eval"}) {
    std::vector<std::string> args;
    if (!sub.empty()) args.push_back(sub);
    args.push_back("--help");
    const auto r = run(args);
    EXPECT_EQ(r.code, 0) << sub;
    const auto golden = kGolden / ("help_" + (sub.empty() ? std::string("main") : sub) + ".txt");
    EXPECT_EQ(r.out, read_file(golden)) << golden;
  }
}

TEST_F(Cli, MissingDatasetIsDataError) {
  const auto missing = path("nope.jsonl").string();
  const auto r = run({"label", "--dataset", missing, "--out", path("o.jsonl").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  const auto data = write_dataset(2).string();
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"label", "--dataset", data}).code, 1);
  EXPECT_EQ(run({"extract", "--dataset", data, "--scorer", "magic", "--out", path("o").string()}).code,
            1);
  EXPECT_EQ(run({"extract", "--dataset", data, "--scorer", "external", "--out", path("o").string()})
                .code,
            1);
  EXPECT_EQ(run({"label", "--dataset", data, "--epsilon", "1.5", "--out", path("o").string()}).code, 1);
  EXPECT_EQ(run({"run", "--dataset", data, "--endpoint-url", "mock://echo-text", "--template",
                 (fs::path(KEYSIG_TEMPLATE_DIR) / "claude" / "cnn_kp.txt").string(), "--out",
                 path("o").string()})
                .code,
            1);
}

TEST_F(Cli, EmptyDatasetProducesEmptyOracle) {
  const auto data = path("empty.jsonl");
  write_file(data, "");
  const auto out = path("oracle.jsonl");
  const auto r = run({"oracle", "--dataset", data.string(), "--out", out.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(out), "");
}

TEST_F(Cli, SchemaErrorNamesLine) {
  const auto data = path("bad.jsonl");
  write_file(data, "{\"id\":\"a\",\"source\":\"s\",\"summary\":\"t\"}\n{\"id\":\"b\"}\n");
  const auto r = run({"label", "--dataset", data.string(), "--out", path("o.jsonl").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(Cli, TransportFailureExitsThree) {
  const auto data = write_dataset(3).string();
  const auto r = run({"run", "--dataset", data, "--endpoint-url", "mock://fail", "--template",
                      (fs::path(KEYSIG_TEMPLATE_DIR) / "claude" / "cnn.txt").string(), "--out",
                      path("o.jsonl").string()});
  EXPECT_EQ(r.code, 3);
}

TEST_F(Cli, ConfigSidecarReproducesRun) {
  const auto data = write_dataset(4).string();
  const auto out1 = path("kp1.jsonl"), out2 = path("kp2.jsonl");
  ASSERT_EQ(run({"extract", "--dataset", data, "--scorer", "textrank", "--k", "7", "--window", "3",
                 "--order", "position", "--out", out1.string()})
                .code,
            0);
  const auto sidecar = fs::path(out1.string() + ".config.ini");
  ASSERT_TRUE(fs::exists(sidecar));
  const std::string ini = read_file(sidecar);
  EXPECT_EQ(ini.rfind("[extract]\n", 0), 0u);
  EXPECT_NE(ini.find("scorer=\"textrank\""), std::string::npos) << ini;

  const auto r = run({"--config", sidecar.string(), "extract", "--out", out2.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(out1), read_file(out2));
  for (const auto& line : load_keyphrases(out2)) EXPECT_LE(line.keyphrases.size(), 7u);
}

TEST_F(Cli, PipelineProducesEvaluation) {
  const auto data = write_dataset(5).string();
  const auto oracle = path("oracle.jsonl"), kp = path("kp.jsonl"), out = path("run.jsonl"),
             report = path("report.json");
  ASSERT_EQ(run({"oracle", "--dataset", data, "--out", oracle.string()}).code, 0);
  ASSERT_EQ(run({"extract", "--dataset", data, "--scorer", "rake", "--out", kp.string()}).code, 0);
  const auto r = run({"run", "--dataset", data, "--endpoint-url", "mock://keyphrases?n=5",
                      "--template", (fs::path(KEYSIG_TEMPLATE_DIR) / "claude" / "cnn_kp.txt").string(),
                      "--keyphrases", oracle.string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto e = run({"eval", "--run", out.string(), "--dataset", data, "--keyphrases", kp.string(),
                      "--oracle", oracle.string(), "--k", "5,15", "--out", report.string()});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("R@15"), std::string::npos);
  const Json rep = Json::parse(read_file(report));
  EXPECT_EQ(rep.at("n"), 5);
  EXPECT_GT(rep.at("r1").at("r").get<double>(), 0.0);
}

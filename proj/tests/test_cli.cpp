#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dydw/cli.hpp"

using namespace dydw;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream o;
    std::ostringstream e;
    const int c = run_cli(args, o, e);
    return {c, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("dydw_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    [[nodiscard]] std::string sub(const std::string& s) const { return (dir_ / s).string(); }
    fs::path dir_;
};

}  // namespace

TEST(CliFormat, Fnv1a) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(CliFormat, CsvQuoting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST_F(CliTest, SolveWritesCsvAndManifest) {
    const CliRun r = run({"solve", "--k", "1.0", "--out", sub("a")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const std::string csv = slurp(dir_ / "a" / "solve.csv");
    EXPECT_NE(csv.find("K,gamma,gamma_residual,p,log_p"), std::string::npos);
    const auto m = nlohmann::json::parse(slurp(dir_ / "a" / "manifest.json"));
    EXPECT_EQ(m["tool"], "dydw");
    EXPECT_EQ(m["seed"], 1);
    EXPECT_EQ(m["outputs"][0]["file"], "solve.csv");
    EXPECT_EQ(m["outputs"][0]["bytes"], csv.size());
    EXPECT_TRUE(m.contains("started_at"));
    EXPECT_TRUE(m.contains("finished_at"));
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run({"solve", "--bogus", "1"}).code, kExitUsage);
    EXPECT_EQ(run({"nosuch"}).code, kExitUsage);
    EXPECT_EQ(run({"solve", "--k", "abc"}).code, kExitUsage);
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"solve", "--k", "-1", "--out", sub("x")}).code, kExitInvalidRange);
    EXPECT_EQ(run({"boxes", "--gamma", "1.5", "--out", sub("x")}).code, kExitInvalidRange);
    std::ofstream(dir_ / "file") << "x";
    EXPECT_EQ(run({"solve", "--out", (dir_ / "file" / "sub").string()}).code, kExitIo);
    EXPECT_EQ(run({"solve", "--config", sub("missing.cfg")}).code, kExitIo);
    const CliRun e = run({"solve", "--k", "-1", "--out", sub("x")});
    EXPECT_EQ(std::count(e.err.begin(), e.err.end(), '\n'), 1);
}

TEST_F(CliTest, HelpListsFlags) {
    const CliRun r = run({"sweep", "--help"});
    EXPECT_EQ(r.code, 0);
    for (const char* flag : {"--k", "--boxes", "--tau-max", "--seed", "--replicates", "--workers", "--out", "--config"})
        EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
}

TEST_F(CliTest, ConfigPrecedence) {
    std::ofstream(dir_ / "run.cfg") << "# solver settings\nk = 2.0\ntol = 1e-11\n";
    ASSERT_EQ(run({"solve", "--config", sub("run.cfg"), "--tol", "1e-12", "--out", sub("c")}).code, kExitOk);
    const auto m = nlohmann::json::parse(slurp(dir_ / "c" / "manifest.json"));
    EXPECT_EQ(m["config"]["k"][0], 2.0);
    EXPECT_EQ(m["config"]["tol"], 1e-12);
    std::ofstream(dir_ / "bad.cfg") << "nonsense = 3\n";
    EXPECT_EQ(run({"solve", "--config", sub("bad.cfg"), "--out", sub("d")}).code, kExitUsage);
}

TEST_F(CliTest, OutputDirFromEnvironment) {
    ::setenv("DYDW_OUTPUT_DIR", sub("env").c_str(), 1);
    const CliRun r = run({"solve"});
    ::unsetenv("DYDW_OUTPUT_DIR");
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(dir_ / "env" / "solve.csv"));
}

TEST_F(CliTest, SweepIsDeterministicAcrossWorkers) {
    const std::vector<std::string> base = {"sweep", "--k", "6", "--boxes", "2", "--tau-max", "1", "--seed", "42",
                                           "--replicates", "50"};
    auto a = base;
    a.insert(a.end(), {"--workers", "1", "--out", sub("w1")});
    auto b = base;
    b.insert(b.end(), {"--workers", "3", "--out", sub("w3")});
    ASSERT_EQ(run(a).code, kExitOk);
    ASSERT_EQ(run(b).code, kExitOk);
    for (const char* f : {"intervals.csv", "summary.csv"}) EXPECT_EQ(slurp(dir_ / "w1" / f), slurp(dir_ / "w3" / f));
}

TEST_F(CliTest, ReplayReproducesChecksums) {
    ASSERT_EQ(run({"sticky", "--replicates", "200", "--seed", "5", "--out", sub("s")}).code, kExitOk);
    const CliRun r = run({"replay", "--manifest", sub("s/manifest.json")});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("match"), std::string::npos);

    auto m = nlohmann::ordered_json::parse(slurp(dir_ / "s" / "manifest.json"));
    m["outputs"][0]["fnv1a64"] = "0000000000000000";
    std::ofstream(dir_ / "s" / "tampered.json") << m.dump();
    EXPECT_EQ(run({"replay", "--manifest", sub("s/tampered.json")}).code, kExitReplayMismatch);
}

TEST_F(CliTest, SurvivalTableHasBoundColumns) {
    ASSERT_EQ(run({"survival", "--k", "1", "--n", "100000", "--stride", "1000", "--out", sub("v")}).code, kExitOk);
    const std::string csv = slurp(dir_ / "v" / "survival.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "K,j,eps,n,survival,lower,upper");
    ASSERT_EQ(run({"survival", "--k", "1", "--n", "2000", "--eps", "0.1", "--out", sub("w")}).code, kExitOk);
    EXPECT_TRUE(fs::exists(dir_ / "w" / "survival_infinite.csv"));
}

TEST_F(CliTest, BoxesAndExperiments) {
    ASSERT_EQ(run({"boxes", "--index", "0,1,2", "--replicates", "1000", "--out", sub("b")}).code, kExitOk);
    EXPECT_NE(slurp(dir_ / "b" / "boxes.csv").find("p_exact"), std::string::npos);
    const CliRun e = run({"experiment", "correlation_decay", "--replicates", "1000", "--out", sub("e")});
    EXPECT_EQ(e.code, kExitOk) << e.err;
    const std::string line = slurp(dir_ / "e" / "report.jsonl");
    EXPECT_EQ(std::count(line.begin(), line.end(), '\n'), 1);
    EXPECT_TRUE(nlohmann::json::parse(line)["passed"].get<bool>());
    EXPECT_TRUE(fs::exists(dir_ / "e" / "cells.csv"));
}

TEST_F(CliTest, FailedGatesExitFive) {
    // One field at K = 8 leaves almost nothing to box-count, so the fit gates fail.
    const CliRun r = run({"experiment", "dimension_boxcount", "--replicates", "1", "--out", sub("f")});
    ASSERT_EQ(r.code, kExitGatesFailed) << r.err;
    EXPECT_NE(r.err.find("gates"), std::string::npos);
    EXPECT_FALSE(nlohmann::json::parse(slurp(dir_ / "f" / "report.jsonl"))["passed"].get<bool>());
}

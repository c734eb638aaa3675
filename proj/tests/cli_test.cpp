// Copyright 2026 The uniftest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "uniftest/cli.hpp"

namespace uniftest::cli {
namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "uniftest");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("uniftest_cli_test_" + name);
}

TEST(ParseGrid, LinearAndList) {
  EXPECT_EQ(parse_grid("0.01:0.2:20").size(), 20u);
  EXPECT_EQ(parse_grid("0.01:0.2:20").front(), 0.01);
  EXPECT_EQ(parse_grid("0.01:0.2:20").back(), 0.2);
  EXPECT_EQ(parse_grid("1:3:3"), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(parse_grid("0.1,0.5,1"), (std::vector<double>{0.1, 0.5, 1}));
  EXPECT_EQ(parse_grid("2:9:1"), (std::vector<double>{2}));
  EXPECT_THROW(parse_grid("1:2"), ConfigError);
  EXPECT_THROW(parse_grid("1:2:0"), ConfigError);
  EXPECT_THROW(parse_grid("a,b"), ConfigError);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(10000.0), "10000");
  EXPECT_EQ(std::stod(format_number(0.7236725056549151)), 0.7236725056549151);
}

TEST(Weights, CsvColumns) {
  const auto r = run_cli({"weights", "--n", "10000", "--N", "10000", "--eps", "0.1", "--p", "1"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = lines(r.out);
  EXPECT_EQ(rows[0], "m,w_minimax,w_chisq,w_collision,w_lr,n,N,epsilon,p,lambda,seed");
  const auto params = ProblemParams::make(10000, 10000, 0.1, 1.0);
  EXPECT_EQ(rows.size(), static_cast<std::size_t>(params.M_max()) + 2);
  EXPECT_EQ(rows[3].substr(0, 2), "2,");
  EXPECT_NE(rows[3].find(",1,1,"), std::string::npos);
}

TEST(Weights, LambdaInsteadOfN) {
  const auto r = run_cli({"weights", "--n", "1000", "--lambda", "0.5", "--eps", "0.1"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(lines(r.out)[1].find(",1000,2000,0.1,1,0.5,1"), std::string::npos);
}

TEST(Risk, FamiliesAndJson) {
  const auto r = run_cli({"risk", "--n", "10000", "--N", "10000", "--eps", "0.1", "--format",
                          "json"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 4u);
  EXPECT_EQ(j[2]["family"], "minimax");
  EXPECT_NEAR(j[2]["risk_asymptotic"].get<double>(), 0.72367250564928562, 1e-9);
  EXPECT_NEAR(j[2]["u_star"].get<double>(), 0.70710678118654752, 1e-15);
}

TEST(Mc, RiskSchemaAndDeterminism) {
  const std::vector<std::string> args = {"mc",       "--n",      "10000", "--N",  "10000",
                                         "--eps",    "0.1",      "--trials", "1000", "--seed",
                                         "3"};
  const auto a = run_cli(args);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(lines(a.out)[0],
            "epsilon,lambda,n,N,p,family,alpha,u_exact,u_star,risk_asymptotic,type1,type2,"
            "risk_empirical,ci_halfwidth,trials,seed,status");
  auto with_workers = args;
  with_workers.insert(with_workers.end(), {"--workers", "4"});
  EXPECT_EQ(run_cli(with_workers).out, a.out);
}

TEST(Curve, RowsPerGridPoint) {
  const auto r = run_cli({"curve", "--eps-grid", "0.05:0.2:4", "--lambda", "0.5,1", "--n",
                          "10000", "--p", "1", "--trials", "500", "--seed", "1"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = lines(r.out);
  EXPECT_EQ(rows.size(), 1u + 8u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NE(rows[i].find(",ok"), std::string::npos);
}

TEST(Curve, InvalidPointReportedInRow) {
  const auto r = run_cli({"curve", "--eps-grid", "0.1,0.7", "--lambda", "1", "--n", "10000",
                          "--trials", "200"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[2].find("error: alternative set is empty"), std::string::npos);
}

TEST(Compare, PresetsAndRatios) {
  const auto r = run_cli({"compare", "--eps-grid", "0.05", "--n", "10000", "--trials", "300"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = lines(r.out);
  EXPECT_EQ(rows.size(), 1u + 8u);
  EXPECT_NE(rows[0].find("config"), std::string::npos);
  EXPECT_NE(rows[0].find("ratio_empirical"), std::string::npos);
  EXPECT_NE(rows[1].find("n=N/10"), std::string::npos);
}

TEST(Verify, JsonReportAndExitCode) {
  const auto ok = run_cli({"verify", "--suite", "identities", "--seed", "1"});
  ASSERT_EQ(ok.status, 0) << ok.err;
  const auto j = nlohmann::json::parse(ok.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["checks"][0]["name"], "identities");
  const auto bad = run_cli({"verify", "--suite", "nonsense"});
  EXPECT_EQ(bad.status, 2);
}

TEST(Errors, ExitCodes) {
  EXPECT_EQ(run_cli({"frobnicate"}).status, 2);
  EXPECT_EQ(run_cli({"weights", "--bogus", "1"}).status, 2);
  EXPECT_EQ(run_cli({"weights", "--n", "100", "--N", "100", "--eps", "0.9"}).status, 2);
  EXPECT_EQ(run_cli({"weights", "--n", "100", "--N", "100"}).status, 2);
  EXPECT_EQ(run_cli({"mc", "--n", "100", "--N", "100", "--eps", "0.1", "--trials", "5"}).status,
            2);
  EXPECT_EQ(run_cli({"weights", "--config", "/nonexistent/config.json"}).status, 2);
}

TEST(Config, FileAndFlagOverride) {
  const auto path = temp_path("config.json");
  {
    std::ofstream f(path);
    f << R"({"command": "weights", "n": 10000, "N": 10000, "epsilon": 0.2, "p": 1})";
  }
  const auto from_file = run_cli({"--config", path.string()});
  ASSERT_EQ(from_file.status, 0) << from_file.err;
  EXPECT_NE(lines(from_file.out)[1].find(",10000,10000,0.2,1,1,1"), std::string::npos);
  const auto overridden = run_cli({"--config", path.string(), "--eps", "0.1"});
  EXPECT_NE(lines(overridden.out)[1].find(",10000,10000,0.1,1,1,1"), std::string::npos);
  {
    std::ofstream f(path);
    f << R"({"command": "weights", "bogus": 1})";
  }
  EXPECT_EQ(run_cli({"--config", path.string()}).status, 2);
  std::filesystem::remove(path);
}

TEST(Output, FileIsByteIdenticalAcrossRuns) {
  const auto a = temp_path("a.csv"), b = temp_path("b.csv");
  const std::vector<std::string> base = {"curve", "--eps-grid", "0.05,0.1", "--lambda", "1",
                                         "--n",   "10000",      "--trials", "300", "--out"};
  auto args_a = base, args_b = base;
  args_a.push_back(a.string());
  args_b.push_back(b.string());
  args_b.insert(args_b.end(), {"--workers", "3"});
  ASSERT_EQ(run_cli(args_a).status, 0);
  ASSERT_EQ(run_cli(args_b).status, 0);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  EXPECT_FALSE(slurp(a).empty());
  EXPECT_EQ(slurp(a), slurp(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Binary, ExitStatusFromShell) {
  const std::string cli = UNIFTEST_CLI_PATH;
  const int ok = std::system((cli + " weights --n 100 --N 100 --eps 0.1 > /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(ok), 0);
  const int bad = std::system((cli + " weights --n 100 --N 100 --eps 0.9 2> /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(bad), 2);
}

}  // namespace
}  // namespace uniftest::cli

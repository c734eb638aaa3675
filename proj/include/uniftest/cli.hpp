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
#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uniftest/error.hpp"
#include "uniftest/model.hpp"
#include "uniftest/montecarlo.hpp"
#include "uniftest/risk.hpp"
#include "uniftest/statistics.hpp"
#include "uniftest/verify.hpp"

namespace uniftest::cli {

using Row = nlohmann::ordered_json;

enum class Format { kCsv, kJson };

struct RunConfig {
  std::string command;
  std::optional<double> n;
  std::optional<std::int64_t> N;
  std::optional<double> epsilon;
  double p = 1.0;
  double xi = ProblemParams::kDefaultXi;
  std::vector<double> lambdas;
  std::vector<double> epsilon_grid;
  TestFamily test = TestFamily::kMinimax;
  std::optional<double> alpha;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::string output_path;
  Format format = Format::kCsv;
  std::string suite = "all";
};

// ---------------------------------------------------------------------------
// Formatting

// Shortest representation that round-trips, so output is reproducible
// byte for byte.
inline std::string format_number(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

inline std::string csv_field(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_float()) return format_number(v.get<double>());
  const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

inline void write_csv(std::ostream& out, const std::vector<Row>& rows) {
  if (rows.empty()) return;
  bool first = true;
  for (const auto& item : rows.front().items()) {
    out << (first ? "" : ",") << item.key();
    first = false;
  }
  out << '\n';
  for (const auto& row : rows) {
    first = true;
    for (const auto& item : rows.front().items()) {
      out << (first ? "" : ",") << csv_field(row.contains(item.key()) ? row[item.key()] : Row());
      first = false;
    }
    out << '\n';
  }
}

inline void write_rows(std::ostream& out, const std::vector<Row>& rows, Format format) {
  if (format == Format::kCsv) {
    write_csv(out, rows);
  } else {
    out << Row(rows).dump(2) << '\n';
  }
}

// NaN and infinities have no JSON representation; they become null.
inline Row number(double v) { return std::isfinite(v) ? Row(v) : Row(); }

// ---------------------------------------------------------------------------
// Grid parsing

// "start:stop:count" (inclusive, linear) or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& text) {
  auto to_double = [&](const std::string& token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + token + "' in grid '" + text + "'");
    }
    if (used != token.size()) {
      throw ConfigError("cannot parse number '" + token + "' in grid '" + text + "'");
    }
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw ConfigError("grid '" + text + "' must be start:stop:count");
    const double start = to_double(parts[0]);
    const double stop = to_double(parts[1]);
    const double count = to_double(parts[2]);
    if (!(count >= 1.0) || count != std::floor(count)) {
      throw ConfigError("grid '" + text + "' needs a positive integer count");
    }
    const auto k = static_cast<int>(count);
    for (int i = 0; i < k; ++i) {
      out.push_back(k == 1 ? start : start + (stop - start) * i / (k - 1));
    }
    return out;
  }
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) out.push_back(to_double(part));
  if (out.empty()) throw ConfigError("empty grid");
  return out;
}

// ---------------------------------------------------------------------------
// Parameter resolution

inline ProblemParams single_params(const RunConfig& config) {
  if (!config.n) throw ConfigError(config.command + ": --n is required");
  if (!config.epsilon) throw ConfigError(config.command + ": --eps is required");
  std::int64_t N = 0;
  if (config.N) {
    N = *config.N;
  } else if (config.lambdas.size() == 1) {
    N = categories_for(*config.n, config.lambdas.front());
  } else {
    throw ConfigError(config.command + ": give --N or a single --lambda");
  }
  return ProblemParams::make(*config.n, N, *config.epsilon, config.p, config.xi);
}

inline SweepBase sweep_base(const RunConfig& config) {
  if (!config.n) throw ConfigError(config.command + ": --n is required");
  SweepBase base;
  base.n = *config.n;
  base.p = config.p;
  base.xi = config.xi;
  base.alpha = config.alpha;
  return base;
}

inline void add_provenance(Row& row, double n, std::int64_t N, double epsilon, double p,
                           double lambda, std::uint64_t seed) {
  row["n"] = number(n);
  row["N"] = N;
  row["epsilon"] = number(epsilon);
  row["p"] = number(p);
  row["lambda"] = number(lambda);
  row["seed"] = seed;
}

// ---------------------------------------------------------------------------
// Commands

inline std::vector<Row> weights_table(const RunConfig& config) {
  const auto params = single_params(config);
  std::vector<WeightSequence> columns;
  for (auto family : {TestFamily::kMinimax, TestFamily::kChisq, TestFamily::kCollision,
                      TestFamily::kLr}) {
    columns.push_back(family_weights(params, family));
  }
  std::vector<Row> rows;
  for (int m = 0; m <= params.M_max(); ++m) {
    Row row;
    row["m"] = m;
    row["w_minimax"] = number(columns[0][m]);
    row["w_chisq"] = number(columns[1][m]);
    row["w_collision"] = number(columns[2][m]);
    row["w_lr"] = number(columns[3][m]);
    add_provenance(row, params.n(), params.N(), params.epsilon(), params.p(), params.lambda(),
                   config.seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Closed-form asymptotics: one row per test family, at alpha* under pi*
// unless --alpha is given.
inline std::vector<Row> risk_table(const RunConfig& config) {
  const auto params = single_params(config);
  const auto exact = u_exact(params);
  const auto star = u_star(params);
  const auto lr = u_lr(params);
  const auto delta = delta_star(params);
  std::vector<Row> rows;
  for (auto family : {TestFamily::kChisq, TestFamily::kCollision, TestFamily::kMinimax,
                      TestFamily::kLr}) {
    auto test = optimal_test(params, family);
    if (config.alpha) test = test.with_alpha(*config.alpha);
    Row row;
    add_provenance(row, params.n(), params.N(), params.epsilon(), params.p(), params.lambda(),
                   config.seed);
    row["family"] = std::string(to_string(family));
    row["alpha"] = number(test.alpha());
    row["shift_ratio"] = number(mean_shift_ratio(params, test.weights(), delta));
    row["risk_asymptotic"] = number(linear_test_asymptotic_risk(test, delta));
    row["u_exact"] = number(exact.u);
    row["u_star"] = number(star.u);
    row["u_lr"] = number(lr.u);
    row["risk_exact"] = number(exact.risk);
    row["risk_star"] = number(star.risk);
    row["risk_lr"] = number(lr.risk);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Row risk_row(const RiskRow& r) {
  Row row;
  row["epsilon"] = number(r.epsilon);
  row["lambda"] = number(r.lambda);
  row["n"] = number(r.n);
  row["N"] = r.N;
  row["p"] = number(r.p);
  row["family"] = std::string(to_string(r.family));
  if (!r.config.empty()) row["config"] = r.config;
  const bool ok = !r.error;
  row["alpha"] = ok ? number(r.report.alpha) : Row();
  row["u_exact"] = ok ? number(r.u_exact) : Row();
  row["u_star"] = ok ? number(r.u_star) : Row();
  row["risk_asymptotic"] = ok ? number(r.report.asymptotic_risk) : Row();
  row["type1"] = ok ? number(r.report.type1_rate) : Row();
  row["type2"] = ok ? number(r.report.type2_rate) : Row();
  row["risk_empirical"] = ok ? number(r.report.empirical_risk) : Row();
  row["ci_halfwidth"] = ok ? number(r.report.ci_halfwidth) : Row();
  row["trials"] = r.report.trials;
  row["seed"] = r.report.seed;
  if (!r.config.empty()) {
    row["risk_minimax"] = ok ? number(r.risk_minimax) : Row();
    row["ratio_empirical"] = ok ? number(r.ratio_empirical()) : Row();
    row["ratio_asymptotic"] = ok ? number(r.ratio_asymptotic()) : Row();
  }
  row["status"] = ok ? std::string("ok") : "error: " + *r.error;
  return row;
}

// Monte-Carlo risk of one test against pi* at a single parameter point.
inline std::vector<Row> mc_table(const RunConfig& config) {
  const auto params = single_params(config);
  auto test = optimal_test(params, config.test);
  if (config.alpha) test = test.with_alpha(*config.alpha);
  RiskRow r;
  r.epsilon = params.epsilon();
  r.lambda = params.lambda();
  r.n = params.n();
  r.N = params.N();
  r.p = params.p();
  r.family = config.test;
  r.u_exact = u_exact(params).u;
  r.u_star = u_star(params).u;
  r.report = estimate_risk(params, test, PriorSpec::least_favorable(params), config.trials,
                           config.seed, config.workers);
  return {risk_row(r)};
}

inline std::vector<Row> curve_table(const RunConfig& config) {
  const auto base = sweep_base(config);
  const auto eps = config.epsilon_grid.empty() ? parse_grid("0.01:0.2:20") : config.epsilon_grid;
  const auto lambdas =
      config.lambdas.empty() ? std::vector<double>{0.1, 0.5, 1.0} : config.lambdas;
  std::vector<Row> rows;
  for (const auto& r :
       risk_curve(base, eps, lambdas, config.test, config.trials, config.seed, config.workers)) {
    rows.push_back(risk_row(r));
  }
  return rows;
}

inline std::vector<Row> compare_table(const RunConfig& config) {
  const auto base = sweep_base(config);
  const auto eps =
      config.epsilon_grid.empty() ? parse_grid("0.025,0.05,0.075,0.1,0.125,0.15")
                                   : config.epsilon_grid;
  std::vector<CompareConfig> configs;
  if (config.lambdas.empty()) {
    configs = default_compare_configs();
  } else {
    for (double lambda : config.lambdas) {
      configs.push_back({"lambda=" + format_number(lambda), lambda});
    }
  }
  std::vector<Row> rows;
  for (const auto& r :
       compare_tests(base, eps, configs, config.trials, config.seed, config.workers)) {
    rows.push_back(risk_row(r));
  }
  return rows;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"identities", "pinv",      "convexity",
                                                 "optimizer",  "normality", "quadratic"};
  return names;
}

inline std::vector<CheckResult> run_suite(const RunConfig& config) {
  if (config.suite == "all") {
    SuiteOptions options;
    options.seed = config.seed;
    options.workers = config.workers;
    if (config.trials != RunConfig{}.trials) options.normality_trials = config.trials;
    return run_verify_suite(options);
  }
  const std::int64_t N = 10000;
  if (config.suite == "identities") return {check_identities()};
  if (config.suite == "pinv") {
    std::vector<CheckResult> out;
    for (double lambda : {0.1, 1.0, 5.0}) {
      out.push_back(check_pinv(ProblemParams::make(lambda * N, N, 0.1, 1.0), 32));
    }
    return out;
  }
  if (config.suite == "convexity") {
    return {check_f_convexity(ProblemParams::make(N, N, 0.1, 1.0, config.xi))};
  }
  if (config.suite == "optimizer") {
    std::vector<CheckResult> out;
    for (double lambda : {0.5, 1.0}) {
      out.push_back(check_optimizer(ProblemParams::make(lambda * N, N, 0.1, 1.0)));
    }
    return out;
  }
  if (config.suite == "normality") {
    const std::size_t trials = config.trials == RunConfig{}.trials ? 5000 : config.trials;
    return {check_normality(ProblemParams::make(N, N, 0.1, 1.0), trials, config.seed,
                            config.workers)};
  }
  if (config.suite == "quadratic") return {check_quadratic_approx()};
  throw ConfigError("unknown suite '" + config.suite + "'");
}

inline Row check_row(const CheckResult& c, std::uint64_t seed) {
  Row row;
  row["name"] = c.name;
  row["passed"] = c.passed;
  row["worst_residual"] = number(c.worst_residual);
  row["tolerance"] = number(c.tolerance);
  row["grid"] = c.grid_description;
  row["seed"] = seed;
  return row;
}

// ---------------------------------------------------------------------------
// Configuration

inline Format parse_format(const std::string& text) {
  if (text == "csv") return Format::kCsv;
  if (text == "json") return Format::kJson;
  throw ConfigError("unknown format '" + text + "' (expected csv or json)");
}

inline std::vector<double> grid_from_json(const nlohmann::json& v) {
  if (v.is_string()) return parse_grid(v.get<std::string>());
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) return v.get<std::vector<double>>();
  throw ConfigError("grid values must be a string, a number or an array");
}

// Fills every field present in the JSON object. Keys mirror RunConfig.
inline void apply_json(RunConfig& config, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  static const std::vector<std::string> known = {
      "command", "n",     "N",     "epsilon", "p",       "xi",     "lambda", "eps_grid",
      "test",    "alpha", "trials", "seed",   "workers", "output", "format", "suite"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigError("unknown config key '" + item.key() + "'");
    }
  }
  try {
    if (j.contains("command")) config.command = j["command"].get<std::string>();
    if (j.contains("n")) config.n = j["n"].get<double>();
    if (j.contains("N")) config.N = j["N"].get<std::int64_t>();
    if (j.contains("epsilon")) config.epsilon = j["epsilon"].get<double>();
    if (j.contains("p")) config.p = j["p"].get<double>();
    if (j.contains("xi")) config.xi = j["xi"].get<double>();
    if (j.contains("lambda")) config.lambdas = grid_from_json(j["lambda"]);
    if (j.contains("eps_grid")) config.epsilon_grid = grid_from_json(j["eps_grid"]);
    if (j.contains("test")) config.test = parse_family(j["test"].get<std::string>());
    if (j.contains("alpha")) config.alpha = j["alpha"].get<double>();
    if (j.contains("trials")) config.trials = j["trials"].get<std::size_t>();
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) config.workers = j["workers"].get<unsigned>();
    if (j.contains("output")) config.output_path = j["output"].get<std::string>();
    if (j.contains("format")) config.format = parse_format(j["format"].get<std::string>());
    if (j.contains("suite")) config.suite = j["suite"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config file '" + path + "': " + e.what());
  }
  RunConfig config;
  apply_json(config, j);
  return config;
}

// ---------------------------------------------------------------------------
// Dispatch

// Runs one command, writing the table to `out`. Returns the exit status.
inline int run(const RunConfig& config, std::ostream& out) {
  if (config.command == "verify") {
    const auto results = run_suite(config);
    bool all_passed = true;
    std::vector<Row> rows;
    for (const auto& c : results) {
      all_passed = all_passed && c.passed;
      rows.push_back(check_row(c, config.seed));
    }
    if (config.format == Format::kJson) {
      Row report;
      report["suite"] = config.suite;
      report["seed"] = config.seed;
      report["passed"] = all_passed;
      report["checks"] = rows;
      out << report.dump(2) << '\n';
    } else {
      write_csv(out, rows);
    }
    return all_passed ? 0 : 1;
  }
  std::vector<Row> rows;
  if (config.command == "weights") {
    rows = weights_table(config);
  } else if (config.command == "risk") {
    rows = risk_table(config);
  } else if (config.command == "mc") {
    rows = mc_table(config);
  } else if (config.command == "curve") {
    rows = curve_table(config);
  } else if (config.command == "compare") {
    rows = compare_table(config);
  } else {
    throw ConfigError("unknown command '" + config.command + "'");
  }
  write_rows(out, rows, config.format);
  return 0;
}

inline int run_to_destination(const RunConfig& config, std::ostream& stdout_stream) {
  if (config.output_path.empty()) return run(config, stdout_stream);
  std::ostringstream buffer;
  const int status = run(config, buffer);
  std::ofstream file(config.output_path, std::ios::binary);
  if (!file) throw Error("cannot write '" + config.output_path + "'");
  file << buffer.str();
  return status;
}

// Full command line: parse, merge the optional config file (flags win),
// dispatch. Exit codes: 0 success, 1 runtime error or failed check,
// 2 usage or validation error.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout,
                std::ostream& err = std::cerr) {
  CLI::App app{"Minimax uniformity testing for Poisson count data"};
  app.set_version_flag("--version", "uniftest 1.0.0");
  std::string command;
  std::optional<double> n, epsilon, alpha, p, xi;
  std::optional<std::int64_t> N;
  std::string lambda_text, eps_grid_text, test_text, format_text, config_path, out_path,
      suite;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;

  app.add_option("command", command, "weights | risk | mc | curve | compare | verify")
      ->check(CLI::IsMember({"weights", "risk", "mc", "curve", "compare", "verify"}));
  app.add_option("--n", n, "expected total sample count");
  app.add_option("--N", N, "number of categories");
  app.add_option("--eps", epsilon, "separation radius epsilon");
  app.add_option("--p", p, "l_p norm exponent in (0, 2]");
  app.add_option("--xi", xi, "hypercube half-width multiplier in (0, 1)");
  app.add_option("--lambda", lambda_text, "n/N values: list a,b,c or start:stop:count");
  app.add_option("--eps-grid", eps_grid_text, "epsilon grid: list or start:stop:count");
  app.add_option("--test", test_text, "minimax | chisq | collision | lr");
  app.add_option("--alpha", alpha, "test level (default: risk-optimal alpha*)");
  app.add_option("--trials", trials, "Monte-Carlo trials per arm (default 10000)");
  app.add_option("--seed", seed, "master seed (default 1)");
  app.add_option("--workers", workers, "worker threads, 0 = auto");
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--format", format_text, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--config", config_path, "JSON config file; flags override it");
  app.add_option("--suite", suite, "verify suite: all | identities | pinv | convexity | "
                                   "optimizer | normality | quadratic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config_file(config_path);
    if (!command.empty()) config.command = command;
    if (config.command.empty()) throw ConfigError("no command given");
    if (n) config.n = n;
    if (N) config.N = N;
    if (epsilon) config.epsilon = epsilon;
    if (p) config.p = *p;
    if (xi) config.xi = *xi;
    if (!lambda_text.empty()) config.lambdas = parse_grid(lambda_text);
    if (!eps_grid_text.empty()) config.epsilon_grid = parse_grid(eps_grid_text);
    if (!test_text.empty()) config.test = parse_family(test_text);
    if (alpha) config.alpha = alpha;
    if (trials) config.trials = *trials;
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (!out_path.empty()) config.output_path = out_path;
    if (!format_text.empty()) config.format = parse_format(format_text);
    if (!suite.empty()) config.suite = suite;
    if (config.command == "verify" && config_path.empty() && format_text.empty()) {
      config.format = Format::kJson;
    }
    return run_to_destination(config, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace uniftest::cli

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"

using namespace polyflow;
namespace fs = std::filesystem;

namespace {

json circle_config() {
  return json::parse(R"({
    "target": {"c": 0, "n": 2},
    "grid": {"dims": 1, "sizes": [256], "lengths": [6.283185307179586]},
    "initial_map": {"name": "Circle", "params": {"r": 1}},
    "action": "Energies"
  })");
}

ErrorCode parse_error(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidSpec;  // sentinel: no error raised
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Workdir {
 public:
  Workdir() {
    dir_ = fs::temp_directory_path() / ("polyflow_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(dir_);
  }
  ~Workdir() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  const fs::path& path() const { return dir_; }

  void write(const std::string& name, const json& j) const { std::ofstream(dir_ / name) << j.dump(2); }
  void write_text(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  /// Runs the CLI inside the directory; returns the exit status.
  int cli(const std::string& args, const std::string& threads = "") const {
    std::string cmd = "cd '" + dir_.string() + "' && ";
    if (!threads.empty()) cmd += "POLYFLOW_THREADS=" + threads + " ";
    cmd += std::string("'") + POLYFLOW_CLI + "' " + args + " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

 private:
  fs::path dir_;
  static inline int counter_ = 0;
};

json sample_config(const std::string& name) {
  std::ifstream in(fs::path(POLYFLOW_CONFIG_DIR) / name);
  return json::parse(in);
}

}  // namespace

TEST(ParseConfig, DefaultsAndFields) {
  const ExperimentConfig cfg = parse_config(circle_config());
  EXPECT_EQ(cfg.c, 0.0);
  EXPECT_EQ(cfg.n, 2);
  EXPECT_EQ(cfg.map_name, "Circle");
  EXPECT_EQ(cfg.map_params.at("r"), 1.0);
  EXPECT_EQ(cfg.action, Action::Energies);
  EXPECT_EQ(cfg.grid.differentiation, Differentiation::Spectral);
  EXPECT_EQ(cfg.metric_mode, MetricMode::Prescribed);
  EXPECT_EQ(cfg.output_prefix, "polyflow");
  EXPECT_EQ(cfg.p_list, (std::vector<double>{2.0, 4.0}));
}

TEST(ParseConfig, RejectsMalformedConfigs) {
  auto with = [](auto mutate) {
    json j = circle_config();
    mutate(j);
    return parse_error(j);
  };
  EXPECT_EQ(with([](json& j) { j["bogus"] = 1; }), ErrorCode::ConfigError);
  EXPECT_EQ(with([](json& j) { j.erase("target"); }), ErrorCode::ConfigError);
  EXPECT_EQ(with([](json& j) { j["action"] = "Dance"; }), ErrorCode::ConfigError);
  EXPECT_EQ(with([](json& j) { j["action"] = "Flow"; }), ErrorCode::ConfigError);
  EXPECT_EQ(with([](json& j) { j["target"]["n"] = 2.5; }), ErrorCode::ConfigError);
  EXPECT_EQ(with([](json& j) { j["grid"]["differentiation"] = "Magic"; }), ErrorCode::ConfigError);
  EXPECT_EQ(with([](json& j) { j["p_list"] = json::array({0.5}); }), ErrorCode::ConfigError);
  EXPECT_EQ(with([](json& j) {
              j["metric"] = json{{"mode", "Induced"}, {"matrix", json::array({1, 0, 0, 1})}};
            }),
            ErrorCode::ConfigError);
  EXPECT_EQ(with([](json& j) {
              j["action"] = "Flow";
              j["flow"] = json{{"grow", 0.5}};
            }),
            ErrorCode::BadParams);
}

TEST(LoadConfig, MissingAndMalformedFiles) {
  Workdir w;
  w.write_text("broken.json", "{\"target\": ");
  for (const char* name : {"broken.json", "absent.json"}) {
    try {
      load_config(w.path() / name);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
  }
}

TEST(Execute, EnergiesInProcess) {
  std::ostringstream err;
  const RunOutcome r = execute(parse_config(circle_config()), err);
  EXPECT_EQ(r.exit_code, 0);
  const json& e = r.summary.at("energies");
  EXPECT_NEAR(e.at("E2").get<double>(), fixtures::kPi, 1e-8);
  EXPECT_NEAR(e.at("Lp_tension").at("4").get<double>(), 2.0 * fixtures::kPi, 1e-8);
  EXPECT_EQ(r.summary.at("target").at("model"), "Flat");
}

TEST(Execute, BuildErrorsPropagate) {
  json j = circle_config();
  j["initial_map"]["name"] = "Spiral";
  std::ostringstream err;
  try {
    execute(parse_config(j), err);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownExample);
  }
  j = circle_config();
  j["initial_map"]["params"]["radius"] = 2;
  EXPECT_THROW(execute(parse_config(j), err), Error);
  std::ostringstream err2;
  EXPECT_EQ(run(parse_config(j), err2), 2);
  EXPECT_NE(err2.str().find("BadParams"), std::string::npos);
}

TEST(Cli, ExamplesListing) {
  Workdir w;
  EXPECT_EQ(w.cli("examples"), 0);
  const std::string out = slurp(w.path() / "stdout.txt");
  for (const ExampleInfo& e : example_catalog()) EXPECT_NE(out.find(e.name), std::string::npos) << e.name;
}

TEST(Cli, UsageErrorsExitTwo) {
  Workdir w;
  EXPECT_EQ(w.cli(""), 2);
  EXPECT_EQ(w.cli("frobnicate"), 2);
  EXPECT_EQ(w.cli("run"), 2);
  EXPECT_EQ(w.cli("run missing.json"), 2);
  w.write_text("broken.json", "not json");
  EXPECT_EQ(w.cli("run broken.json"), 2);
  json j = circle_config();
  j["extra"] = true;
  w.write("extra.json", j);
  EXPECT_EQ(w.cli("run extra.json"), 2);
  EXPECT_NE(slurp(w.path() / "stderr.txt").find("ConfigError"), std::string::npos);
}

TEST(Cli, SampleConfigsRunCleanly) {
  for (const char* name : {"circle_energies.json", "geodesic_h2_audit.json", "sphere_variation.json",
                           "h2_triharmonic_flow.json", "torus_h4_audit.json"}) {
    Workdir w;
    json j = sample_config(name);
    j["output_prefix"] = "res/case";
    w.write("cfg.json", j);
    ASSERT_EQ(w.cli("run cfg.json"), 0) << name << ": " << slurp(w.path() / "stderr.txt");
    const json summary = json::parse(slurp(w.path() / "res/case_summary.json"));
    EXPECT_EQ(summary.at("exit_code"), 0);
    EXPECT_EQ(summary.at("action"), j.at("action"));
    if (j.at("action") == "Flow") {
      std::ifstream csv(w.path() / "res/case_trace.csv");
      std::string header;
      std::getline(csv, header);
      EXPECT_EQ(header, "iter,E,E2,E3,Etilde4,L4_tension,sup_tau,sup_descent,dt");
      std::string line;
      long rows = 0;
      while (std::getline(csv, line)) ++rows;
      EXPECT_EQ(rows, summary.at("flow").at("iterations").get<long>() + 1);
      EXPECT_EQ(summary.at("probe").at("verdict"), "minimal");
    } else {
      EXPECT_FALSE(fs::exists(w.path() / "res/case_trace.csv"));
    }
  }
}

TEST(Cli, AuditSubcommandForcesAudit) {
  Workdir w;
  json j = circle_config();
  j["output_prefix"] = "c";
  w.write("cfg.json", j);
  EXPECT_EQ(w.cli("audit cfg.json"), 0);
  const json summary = json::parse(slurp(w.path() / "c_summary.json"));
  EXPECT_EQ(summary.at("action"), "Audit");
  EXPECT_TRUE(summary.at("audit").at("checks").contains("bochner_identity"));
}

TEST(Cli, FailedAuditExitsOne) {
  // Spectral chop 0 on 1024 nodes: the audit reports failed identities.
  Workdir w;
  json j = sample_config("geodesic_h2_audit.json");
  j["initial_map"] = json{{"name", "PerturbedGeodesicH2"}, {"params", {{"amplitude", 0.05}}}};
  j["metric"] = json{{"mode", "Prescribed"}};
  j["grid"] = json{{"dims", 1}, {"sizes", {1024}}, {"spectral_chop", 0.0}};
  j["output_prefix"] = "bad";
  w.write("cfg.json", j);
  EXPECT_EQ(w.cli("audit cfg.json"), 1);
  EXPECT_NE(slurp(w.path() / "stderr.txt").find("audit check failed"), std::string::npos);
  const json summary = json::parse(slurp(w.path() / "bad_summary.json"));
  EXPECT_EQ(summary.at("exit_code"), 1);

  // The default chop restores them.
  j["grid"].erase("spectral_chop");
  w.write("cfg.json", j);
  EXPECT_EQ(w.cli("audit cfg.json"), 0) << slurp(w.path() / "stderr.txt");
}

TEST(Cli, OutputIsIndependentOfWorkerCount) {
  Workdir w;
  json j = sample_config("torus_h4_audit.json");
  j["grid"]["sizes"] = json::array({128, 128});
  std::vector<std::string> outputs;
  for (const char* threads : {"1", "4", "0"}) {
    j["output_prefix"] = std::string("t") + threads;
    w.write("cfg.json", j);
    ASSERT_EQ(w.cli("run cfg.json", threads), 0) << slurp(w.path() / "stderr.txt");
    json s = json::parse(slurp(w.path() / (std::string("t") + threads + "_summary.json")));
    s["config"].erase("output_prefix");
    outputs.push_back(s.dump());
  }
  EXPECT_EQ(outputs[0], outputs[1]);
  EXPECT_EQ(outputs[0], outputs[2]);
}

TEST(Cli, SummaryDoublesRoundTrip) {
  Workdir w;
  json j = circle_config();
  j["output_prefix"] = "rt";
  w.write("cfg.json", j);
  ASSERT_EQ(w.cli("run cfg.json"), 0);
  const json summary = json::parse(slurp(w.path() / "rt_summary.json"));
  std::ostringstream err;
  const RunOutcome in_process = execute(parse_config(j), err);
  EXPECT_EQ(summary.at("energies").at("E3").get<double>(), in_process.summary.at("energies").at("E3").get<double>());
  EXPECT_EQ(summary.at("energies").at("Etilde4").get<double>(),
            in_process.summary.at("energies").at("Etilde4").get<double>());
}

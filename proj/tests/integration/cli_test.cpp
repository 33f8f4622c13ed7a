// SPDX-License-Identifier: Apache-2.0
//
// Exercises the installed command-line surface by spawning the real
// binary: subcommand flows, exit codes, and help output.

#include "doctest.h"
#include "htlab/metrics.hpp"
#include "htlab/process.hpp"
#include "json.hpp"
#include "support/test_util.hpp"

using namespace htlab;
using htlab::test::StubToolchain;
using htlab::test::TempDir;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

ExecResult cli(const std::vector<std::string>& args,
               const std::optional<fs::path>& cwd = {}) {
  ExecRequest req;
  req.argv = {HTLAB_CLI_PATH};
  req.argv.insert(req.argv.end(), args.begin(), args.end());
  req.cwd = cwd;
  req.timeout = std::chrono::milliseconds(60000);
  return run_process(req);
}

fs::path assets() { return fs::path(HTLAB_ASSETS_DIR); }

// Profile file pointing at the stub toolchain, for CLI runs.
fs::path write_profile(const TempDir& tmp, const StubToolchain& tools) {
  json j;
  j["compile_cmd"] = tools.profile.compile_cmd;
  j["sim_cmd"] = tools.profile.sim_cmd;
  j["synth_cmd"] = tools.profile.synth_cmd;
  j["synth_script"] = tools.profile.synth_script;
  j["netlist_compile_cmd"] = tools.profile.netlist_compile_cmd;
  j["netlist_sim_cmd"] = tools.profile.netlist_sim_cmd;
  j["liberty_path"] = tools.profile.liberty_path->string();
  j["cell_models_path"] = tools.profile.cell_models_path->string();
  test::write_file(tmp / "profile.json", j.dump(2));
  return tmp / "profile.json";
}

std::string fallback_script() {
  return "{\"match\": \"*\", \"response\": \"Code: <\\n// HT_BEHAVIOR\\nmodule stubcore(input "
         "clk, output reg [7:0] q);\\n  reg armed;\\nendmodule\\n>\\nExplanation: trigger and "
         "payload\\nTaxonomy: RTL; a; b; c\\nVERDICT: YES\"}\n";
}

}  // namespace

TEST_CASE("every subcommand offers --help and exits zero") {
  for (const char* sub : {"register", "list", "generate", "evaluate", "campaign", "report",
                          "export", "detect", "preflight"}) {
    ExecResult res = cli({sub, "--help"});
    CAPTURE(sub);
    CHECK(res.exit_code == 0);
    CHECK(res.stdout_text.find("--help") != std::string::npos);
  }
  CHECK(cli({"--help"}).exit_code == 0);
}

TEST_CASE("unknown flags and missing subcommands are user errors") {
  CHECK(cli({"list", "--definitely-not-a-flag"}).exit_code != 0);
  CHECK(cli({}).exit_code != 0);
  CHECK(cli({"report"}).exit_code != 0);  // missing required --results
}

TEST_CASE("register and list round-trip through the CLI") {
  TempDir tmp;
  std::string reg = (tmp / "reg").string();
  ExecResult res =
      cli({"register", (assets() / "designs/sram/manifest.json").string(), "--registry", reg});
  CHECK(res.exit_code == 0);
  CHECK(res.stdout_text.find("sram") != std::string::npos);
  CHECK(res.stdout_text.find("lines=52") != std::string::npos);

  ExecResult listed = cli({"list", "--registry", reg, "--json"});
  CHECK(listed.exit_code == 0);
  json j = json::parse(listed.stdout_text);
  REQUIRE(j.size() == 1);
  CHECK(j[0]["id"] == "sram");
  CHECK(j[0]["line_count"] == 52);

  ExecResult filtered = cli({"list", "--registry", reg, "--difficulty", "hard"});
  CHECK(filtered.exit_code == 0);
  CHECK(filtered.stdout_text.empty());

  // Registering a manifest that does not exist is a user error.
  CHECK(cli({"register", (tmp / "absent.json").string(), "--registry", reg}).exit_code == 1);
}

TEST_CASE("generate runs one cell against the mock provider") {
  TempDir tmp;
  StubToolchain tools(tmp.path());
  std::string reg = (tmp / "reg").string();
  test::write_stub_design(tmp / "design");
  REQUIRE(cli({"register", (tmp / "design" / "manifest.json").string(), "--registry", reg})
              .exit_code == 0);
  test::write_file(tmp / "script.jsonl", fallback_script());

  ExecResult res = cli({"generate", "--design", "stubcore", "--ht-type", "HT2", "--model",
                        "mock", "--mock-script", (tmp / "script.jsonl").string(), "--out",
                        (tmp / "gen").string(), "--registry", reg});
  CHECK(res.exit_code == 0);
  CHECK(res.stdout_text.find("compliant=yes") != std::string::npos);
  CHECK(fs::exists(tmp / "gen" / "mock" / "stubcore" / "HT2" / "job.json"));
}

TEST_CASE("campaign, report, export, evaluate, and detect flow through the CLI") {
  TempDir tmp;
  StubToolchain tools(tmp.path());
  fs::path profile = write_profile(tmp, tools);
  std::string reg = (tmp / "reg").string();
  test::write_stub_design(tmp / "design");
  REQUIRE(cli({"register", (tmp / "design" / "manifest.json").string(), "--registry", reg})
              .exit_code == 0);
  test::write_file(tmp / "script.jsonl", fallback_script());
  test::write_file(tmp / "spec.json", R"({
    "design_ids": ["stubcore"],
    "ht_types": ["HT1", "HT2", "HT3"],
    "model_ids": ["mock"],
    "run_gauntlet": true
  })");

  ExecResult camp = cli({"campaign", "--spec", (tmp / "spec.json").string(), "--out",
                         (tmp / "out").string(), "--registry", reg, "--mock-script",
                         (tmp / "script.jsonl").string(), "--profile", profile.string()});
  CHECK(camp.exit_code == 0);
  CHECK(camp.stdout_text.find("3 job(s), 3 survived") != std::string::npos);

  fs::path results = tmp / "out" / "results.json";
  REQUIRE(fs::exists(results));

  ExecResult rep = cli({"report", "--results", results.string(), "--json",
                        (tmp / "report.json").string()});
  CHECK(rep.exit_code == 0);
  CHECK(rep.stdout_text.find("stubcore") != std::string::npos);
  CHECK(rep.stdout_text.find("E0: 100.0%") != std::string::npos);
  json twin = json::parse(test::read_file(tmp / "report.json"));
  CHECK(twin["metrics"]["mock"]["eval0_rate"] == doctest::Approx(100.0));

  ExecResult exp = cli({"export", "--results", results.string(), "--registry",
                        (tmp / "reg_export").string()});
  CHECK(exp.exit_code == 0);
  CHECK(exp.stdout_text.find("exported 3") != std::string::npos);

  // Re-evaluating one existing job dir updates its record in place.
  ExecResult eval = cli({"evaluate", "--job", (tmp / "out" / "mock" / "stubcore" / "HT1").string(),
                         "--registry", reg, "--profile", profile.string()});
  CHECK(eval.exit_code == 0);
  CHECK(eval.stdout_text.find("eval3: pass") != std::string::npos);

  // Detector runs classify each evaluated artifact.
  test::write_file(tmp / "detector.sh", "#!/bin/sh\necho 'VERDICT: CLEAN'\n");
  test::make_executable(tmp / "detector.sh");
  ExecResult det = cli({"detect", "--results", results.string(), "--cmd",
                        (tmp / "detector.sh").string() + " {rtl}", "--timeout", "30"});
  CHECK(det.exit_code == 0);
  CHECK(det.stdout_text.find("not_detected") != std::string::npos);
  CampaignResults with_det = load_results(results);
  CHECK(with_det.detections.size() == 3);

  ExecResult rep2 = cli({"report", "--results", results.string()});
  CHECK(rep2.stdout_text.find("Detector runs") != std::string::npos);
}

TEST_CASE("preflight reports missing binaries with exit code 2") {
  TempDir tmp;
  test::write_file(tmp / "bad_profile.json", R"({
    "compile_cmd": "definitely_not_an_installed_tool_zz {sources}",
    "sim_cmd": "also_not_installed_zz {out}"
  })");
  ExecResult res = cli({"preflight", "--profile", (tmp / "bad_profile.json").string()});
  CHECK(res.exit_code == 2);
  CHECK(res.stderr_text.find("definitely_not_an_installed_tool_zz") != std::string::npos);

  TempDir tmp2;
  StubToolchain tools(tmp2.path());
  fs::path profile = write_profile(tmp2, tools);
  ExecResult ok = cli({"preflight", "--profile", profile.string()});
  CHECK(ok.exit_code == 0);
}

TEST_CASE("campaign with an unknown design id is a user error") {
  TempDir tmp;
  test::write_file(tmp / "spec.json", R"({
    "design_ids": ["phantom_design"],
    "ht_types": ["HT1"],
    "model_ids": ["mock"],
    "run_gauntlet": false
  })");
  ExecResult res = cli({"campaign", "--spec", (tmp / "spec.json").string(), "--out",
                        (tmp / "out").string(), "--registry", (tmp / "reg").string()});
  CHECK(res.exit_code == 1);
  CHECK(res.stderr_text.find("phantom_design") != std::string::npos);
}

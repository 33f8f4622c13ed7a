// SPDX-License-Identifier: Apache-2.0
//
// Shape checks over the shipped assets: the bundled design, its
// testbenches, the scripted trojan responses, and the default config
// files. Catches fixture drift without needing the real toolchain.

#include <set>

#include "doctest.h"
#include "htlab/corpus.hpp"
#include "htlab/extract.hpp"
#include "htlab/gateway.hpp"
#include "htlab/gauntlet.hpp"
#include "htlab/orchestrator.hpp"
#include "htlab/text.hpp"
#include "json.hpp"
#include "support/test_util.hpp"

using namespace htlab;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path assets() { return fs::path(HTLAB_ASSETS_DIR); }

}  // namespace

TEST_CASE("the bundled scratchpad is clean, balanced, and synthesizable-shaped") {
  std::string rtl = test::read_file(assets() / "designs/sram/sram.v");
  auto warnings = validate_rtl_shape(rtl, "sram");
  CHECK(warnings.empty());

  auto mods = declared_modules(rtl);
  REQUIRE(mods.size() == 1);
  CHECK(mods[0] == "sram");

  auto ports = module_input_ports(rtl, "sram");
  std::set<std::string> port_set(ports.begin(), ports.end());
  CHECK(port_set == std::set<std::string>{"clk", "rst", "en", "we", "lock", "addr", "wdata"});
}

TEST_CASE("both testbenches are balanced and drive the activation protocol") {
  for (const char* name : {"tb_sram.v", "tb_sram_trigger.v"}) {
    std::string tb = test::read_file(assets() / "designs/sram" / name);
    CAPTURE(name);
    auto mods = declared_modules(tb);
    REQUIRE(mods.size() == 1);
  }
  std::string trig = test::read_file(assets() / "designs/sram/tb_sram_trigger.v");
  CHECK(trig.find("HT_ACTIVATED") != std::string::npos);
  CHECK(trig.find("HT_PAYLOAD") != std::string::npos);
  std::string orig = test::read_file(assets() / "designs/sram/tb_sram.v");
  CHECK(orig.find("HT_ACTIVATED") == std::string::npos);
}

TEST_CASE("each scripted response extracts into a well-shaped trojan variant") {
  std::string clean = test::read_file(assets() / "designs/sram/sram.v");
  auto clean_ports = module_input_ports(clean, "sram");
  std::set<std::string> clean_set(clean_ports.begin(), clean_ports.end());

  for (const char* name :
       {"sram_ht1_response.txt", "sram_ht2_response.txt", "sram_ht3_response.txt"}) {
    CAPTURE(name);
    std::string response = test::read_file(assets() / "mock/responses" / name);
    ExtractedArtifact art = extract_sections(response);
    CHECK(art.extraction_warnings.empty());
    CHECK_FALSE(art.explanation.empty());
    CHECK_FALSE(art.taxonomy.empty());

    // Synthesizability pre-flight: balanced, top present, no sim-only
    // constructs inside the trojan variants.
    auto warnings = validate_rtl_shape(art.infected_rtl, "sram");
    CHECK(warnings.empty());

    // The bundled variants keep the clean interface (internal triggers).
    auto ports = module_input_ports(art.infected_rtl, "sram");
    CHECK(std::set<std::string>(ports.begin(), ports.end()) == clean_set);

    // Static compliance terms the orchestrator checks for.
    std::string lower = to_lower(art.explanation);
    CHECK(lower.find("trigger") != std::string::npos);
    CHECK(lower.find("payload") != std::string::npos);
  }
}

TEST_CASE("the demo mock script covers three generations plus reviews") {
  fs::path script = assets() / "mock/demo_responses.jsonl";
  REQUIRE(fs::exists(script));
  int entries = 0, reviews = 0, files = 0;
  std::istringstream in(test::read_file(script));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ++entries;
    if (j.contains("response_file")) {
      ++files;
      CHECK(fs::exists(assets() / "mock" / j.at("response_file").get<std::string>()));
    } else if (j.at("response").get<std::string>().find("VERDICT: YES") != std::string::npos) {
      ++reviews;
    }
  }
  CHECK(entries == 6);
  CHECK(files == 3);
  CHECK(reviews == 3);
}

TEST_CASE("the demo campaign spec loads and names the bundled pieces") {
  CampaignSpec spec = CampaignSpec::load(assets() / "campaigns/demo_mock.json");
  CHECK(spec.design_ids == std::vector<std::string>{"sram"});
  CHECK(spec.ht_types.size() == 3);
  CHECK(spec.model_ids == std::vector<std::string>{"mock"});
  CHECK(spec.run_gauntlet);
  CHECK(fs::exists(spec.mock_script));
}

TEST_CASE("the shipped profile and model files parse to the defaults") {
  ToolchainProfile profile = ToolchainProfile::load(assets() / "profiles/iverilog_yosys.json");
  ToolchainProfile defaults;
  CHECK(profile.compile_cmd == defaults.compile_cmd);
  CHECK(profile.sim_cmd == defaults.sim_cmd);
  CHECK(profile.synth_cmd == defaults.synth_cmd);
  CHECK(profile.synth_script == defaults.synth_script);
  CHECK(profile.timeout_for("synth") == defaults.timeout_for("synth"));

  auto models = load_model_registry(assets() / "models/default_models.json");
  auto builtin = default_model_registry();
  REQUIRE(models.size() == builtin.size());
  for (size_t i = 0; i < models.size(); ++i) {
    CAPTURE(models[i].model_id);
    CHECK(models[i].model_id == builtin[i].model_id);
    CHECK(models[i].provider == builtin[i].provider);
    CHECK(models[i].temperature == doctest::Approx(builtin[i].temperature));
    CHECK(models[i].top_p == doctest::Approx(builtin[i].top_p));
    CHECK(models[i].context_window_tokens == builtin[i].context_window_tokens);
  }
}

TEST_CASE("the trigger testbench never arms during the original flow") {
  // The rare sequence is three consecutive locked reads of 0xA; the
  // original bench reads 0xA exactly once under lock.
  std::string orig = test::read_file(assets() / "designs/sram/tb_sram.v");
  size_t lock_on = orig.find("lock = 1;");
  size_t lock_off = orig.find("lock = 0;", lock_on);
  REQUIRE(lock_on != std::string::npos);
  REQUIRE(lock_off != std::string::npos);
  std::string locked_region = orig.substr(lock_on, lock_off - lock_on);
  size_t reads_of_a = 0, pos = 0;
  while ((pos = locked_region.find("do_read(4'hA)", pos)) != std::string::npos) {
    ++reads_of_a;
    ++pos;
  }
  CHECK(reads_of_a == 1);
}

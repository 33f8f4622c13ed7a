// SPDX-License-Identifier: Apache-2.0
#include "htlab/corpus.hpp"

#include "doctest.h"
#include "htlab/errors.hpp"
#include "htlab/gauntlet.hpp"
#include "support/test_util.hpp"

using namespace htlab;
using htlab::test::TempDir;

namespace {

namespace fs = std::filesystem;

fs::path assets() { return fs::path(HTLAB_ASSETS_DIR); }

void write_design(const fs::path& dir, const std::string& name, const std::string& difficulty,
                  const std::string& body_comment = "// body") {
  test::write_file(dir / (name + ".v"),
                   body_comment + "\nmodule " + name + "(input clk);\nendmodule\n");
  test::write_file(dir / ("tb_" + name + ".v"), "module tb_" + name + ";\nendmodule\n");
  test::write_file(dir / "manifest.json",
                   "{\"name\": \"" + name + "\", \"difficulty\": \"" + difficulty +
                       "\", \"top_module\": \"" + name + "\", \"rtl_files\": [\"" + name +
                       ".v\"], \"original_testbench\": \"tb_" + name + ".v\"}");
}

ExtractedArtifact sample_artifact() {
  ExtractedArtifact art;
  art.infected_rtl = "module sram(input clk);\nendmodule\n";
  art.explanation = "trigger plus payload";
  art.taxonomy = parse_taxonomy("RTL; t; l; c");
  return art;
}

}  // namespace

TEST_CASE("registering the bundled scratchpad yields the expected design") {
  TempDir tmp;
  DesignRegistry registry(tmp / "reg");
  Design d = registry.register_design(assets() / "designs/sram/manifest.json");
  CHECK(d.id == "sram");
  CHECK(d.name == "sram");
  CHECK(d.difficulty == Difficulty::easy);
  CHECK(d.top_module == "sram");
  CHECK(d.line_count == 52);
  REQUIRE(d.rtl_files.size() == 1);
  CHECK(fs::exists(d.rtl_files[0]));
  CHECK(d.trigger_testbench.has_value());
}

TEST_CASE("manifest with no rtl_files is a missing-file class error") {
  TempDir tmp;
  test::write_file(tmp / "m.json",
                   "{\"name\": \"x\", \"difficulty\": \"easy\", \"top_module\": \"x\", "
                   "\"rtl_files\": [], \"original_testbench\": \"tb.v\"}");
  DesignRegistry registry(tmp / "reg");
  try {
    registry.register_design(tmp / "m.json");
    FAIL("expected MissingFile");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_file);
  }
}

TEST_CASE("re-registering an identical manifest is idempotent") {
  TempDir tmp;
  write_design(tmp.path(), "alpha", "easy");
  DesignRegistry registry(tmp / "reg");
  Design first = registry.register_design(tmp / "manifest.json");
  Design second = registry.register_design(tmp / "manifest.json");
  CHECK(first.id == second.id);
  CHECK(registry.list_designs().size() == 1);
}

TEST_CASE("register round-trips all fields") {
  TempDir tmp;
  write_design(tmp.path(), "alpha", "medium");
  DesignRegistry registry(tmp / "reg");
  Design stored = registry.register_design(tmp / "manifest.json");
  Design loaded = registry.get_design(stored.id);
  CHECK(loaded.id == stored.id);
  CHECK(loaded.name == stored.name);
  CHECK(loaded.difficulty == stored.difficulty);
  CHECK(loaded.top_module == stored.top_module);
  CHECK(loaded.rtl_files == stored.rtl_files);
  CHECK(loaded.original_testbench == stored.original_testbench);
  CHECK(loaded.trigger_testbench == stored.trigger_testbench);
  CHECK(loaded.golden_log == stored.golden_log);
  CHECK(loaded.line_count == stored.line_count);
  CHECK(test::read_file(loaded.rtl_files[0]) == test::read_file(tmp / "alpha.v"));
}

TEST_CASE("same name with different content is rejected") {
  TempDir tmp;
  fs::create_directories(tmp / "a");
  fs::create_directories(tmp / "b");
  write_design(tmp / "a", "alpha", "easy", "// first body");
  write_design(tmp / "b", "alpha", "easy", "// second body");
  DesignRegistry registry(tmp / "reg");
  registry.register_design(tmp / "a" / "manifest.json");
  try {
    registry.register_design(tmp / "b" / "manifest.json");
    FAIL("expected DuplicateName");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::duplicate_name);
  }
}

TEST_CASE("manifest referencing a missing file fails") {
  TempDir tmp;
  test::write_file(tmp / "m.json",
                   "{\"name\": \"x\", \"difficulty\": \"easy\", \"top_module\": \"x\", "
                   "\"rtl_files\": [\"absent.v\"], \"original_testbench\": \"tb.v\"}");
  DesignRegistry registry(tmp / "reg");
  CHECK_THROWS_AS(registry.register_design(tmp / "m.json"), Error);
}

TEST_CASE("manifest whose top module is not declared fails to parse") {
  TempDir tmp;
  test::write_file(tmp / "x.v", "module other(input c);\nendmodule\n");
  test::write_file(tmp / "tb.v", "module tb;\nendmodule\n");
  test::write_file(tmp / "m.json",
                   "{\"name\": \"x\", \"difficulty\": \"easy\", \"top_module\": \"x\", "
                   "\"rtl_files\": [\"x.v\"], \"original_testbench\": \"tb.v\"}");
  DesignRegistry registry(tmp / "reg");
  try {
    registry.register_design(tmp / "m.json");
    FAIL("expected ManifestParse");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::manifest_parse);
  }
}

TEST_CASE("list_designs ordering and filtering") {
  TempDir tmp;
  DesignRegistry registry(tmp / "reg");
  CHECK(registry.list_designs().empty());

  fs::create_directories(tmp / "s");
  fs::create_directories(tmp / "u");
  fs::create_directories(tmp / "a");
  write_design(tmp / "s", "sram_unit", "easy");
  write_design(tmp / "u", "uart_unit", "medium");
  write_design(tmp / "a", "aes_unit", "hard");
  registry.register_design(tmp / "s" / "manifest.json");
  registry.register_design(tmp / "u" / "manifest.json");
  registry.register_design(tmp / "a" / "manifest.json");

  auto all = registry.list_designs();
  REQUIRE(all.size() == 3);
  CHECK(all[0].name == "aes_unit");
  CHECK(all[1].name == "sram_unit");
  CHECK(all[2].name == "uart_unit");

  auto hard = registry.list_designs(Difficulty::hard);
  REQUIRE(hard.size() == 1);
  CHECK(hard[0].name == "aes_unit");
}

TEST_CASE("export requires a fully survived record") {
  TempDir tmp;
  DesignRegistry registry(tmp / "reg");
  EvalRecord failed = test::make_record("sram", HTType::HT1_change_functionality, "m", "PPX");
  try {
    registry.export_benchmark(failed, sample_artifact());
    FAIL("expected NotSurvived");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_survived);
  }
}

TEST_CASE("export writes files, appends to the index, and replaces by key") {
  TempDir tmp;
  DesignRegistry registry(tmp / "reg");
  EvalRecord ok =
      test::make_record("sram", HTType::HT2_leak_information, "gpt-4-0613", "PPPP", 169168, 169424);

  BenchmarkEntry entry = registry.export_benchmark(ok, sample_artifact());
  CHECK(fs::exists(entry.infected_rtl.at(0)));
  CHECK(registry.benchmark_index().size() == 1);

  // Same key twice: last writer wins, index size unchanged.
  registry.export_benchmark(ok, sample_artifact());
  CHECK(registry.benchmark_index().size() == 1);

  // A different key grows the index.
  EvalRecord other =
      test::make_record("sram", HTType::HT3_denial_of_service, "gpt-4-0613", "PPPP", 10964, 11067);
  registry.export_benchmark(other, sample_artifact());
  auto index = registry.benchmark_index();
  CHECK(index.size() == 2);
}

TEST_CASE("index cardinality equals distinct fully-passed triples") {
  TempDir tmp;
  DesignRegistry registry(tmp / "reg");
  std::vector<EvalRecord> records;
  for (const char* model : {"a", "b"})
    for (HTType t : kAllHTTypes)
      records.push_back(test::make_record("d", t, model, "PPPP", 10, 12));
  // Two of them exported twice; one failed record skipped entirely.
  for (const auto& r : records) registry.export_benchmark(r, sample_artifact());
  registry.export_benchmark(records[0], sample_artifact());
  registry.export_benchmark(records[3], sample_artifact());
  CHECK(registry.benchmark_index().size() == records.size());
}

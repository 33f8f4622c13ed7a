// SPDX-License-Identifier: Apache-2.0
#include "htlab/extract.hpp"

#include <algorithm>
#include <random>

#include "doctest.h"
#include "htlab/errors.hpp"

using namespace htlab;

namespace {

// Reassembly oracle: the four output pieces must cover every non-space
// character of the input exactly once, in order.
std::string squash(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

void check_reassembly(const std::string& input, const ExtractedArtifact& art) {
  // Order-insensitive containment is too weak and order bookkeeping too
  // brittle across permutations; compare as multisets of characters plus
  // total length, which catches drops and duplications.
  std::string all = art.infected_rtl + art.explanation + art.taxonomy.raw + art.residual_text;
  std::string a = squash(all), b = squash(input);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

const char* kListingStyle =
    "Code: <module aes_128(clk, state, key, out, trojan_out);\n"
    "  input clk;\n"
    "  input [127:0] state, key;\n"
    "  output [127:0] out;\n"
    "  output [127:0] trojan_out;\n"
    "endmodule>\n"
    "Explanation: leaks k0 via trojan_out when the trigger fires\n"
    "Taxonomy: RTL; triggered; AES; always-on-dormant\n";

}  // namespace

TEST_CASE("extract_sections parses the contract format") {
  auto art = extract_sections(kListingStyle);
  CHECK(art.infected_rtl.find("module aes_128") == 0);
  CHECK(art.infected_rtl.find("endmodule") != std::string::npos);
  CHECK(art.infected_rtl.find("Explanation") == std::string::npos);
  CHECK(art.explanation == "leaks k0 via trojan_out when the trigger fires");
  CHECK(art.taxonomy.design_phase == "RTL");
  CHECK(art.taxonomy.activation_and_effects == "triggered");
  CHECK(art.taxonomy.location == "AES");
  CHECK(art.taxonomy.characteristics == "always-on-dormant");
  CHECK(art.extraction_warnings.empty());
  check_reassembly(kListingStyle, art);
}

TEST_CASE("prose with no code tokens raises NoCodeFound") {
  try {
    extract_sections("I am sorry, I cannot help with that request.");
    FAIL("expected NoCodeFound");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_code_found);
  }
}

TEST_CASE("fenced block without headers yields code plus warnings") {
  std::string text =
      "Here is the design you asked for:\n```verilog\nmodule top(input a);\nendmodule\n```\n";
  auto art = extract_sections(text);
  CHECK(art.infected_rtl == "module top(input a);\nendmodule\n");
  bool expl = false, taxo = false;
  for (const auto& w : art.extraction_warnings) {
    if (w.find("missing Explanation") != std::string::npos) expl = true;
    if (w.find("missing Taxonomy") != std::string::npos) taxo = true;
  }
  CHECK(expl);
  CHECK(taxo);
  check_reassembly(text, art);
}

TEST_CASE("markdown-adorned headers are recognized") {
  std::string text =
      "**Code:**\n```\nmodule t(input x);\nendmodule\n```\n"
      "**Explanation:** the trigger is rare and the payload is hidden\n"
      "**Taxonomy:** RTL; a; b; c\n";
  auto art = extract_sections(text);
  CHECK(art.infected_rtl.find("module t") != std::string::npos);
  CHECK(art.explanation.find("the trigger is rare") == 0);
  CHECK(art.taxonomy.design_phase == "RTL");
  check_reassembly(text, art);
}

TEST_CASE("module scan fallback when nothing else matches") {
  std::string text =
      "The modified design follows.\nmodule z(input c);\nendmodule\nThat is all.\n";
  auto art = extract_sections(text);
  CHECK(art.infected_rtl.find("module z") == 0);
  CHECK(art.infected_rtl.rfind("endmodule") != std::string::npos);
  CHECK(art.residual_text.find("That is all.") != std::string::npos);
  check_reassembly(text, art);
}

TEST_CASE("extraction is deterministic") {
  auto a = extract_sections(kListingStyle);
  auto b = extract_sections(kListingStyle);
  CHECK(a.infected_rtl == b.infected_rtl);
  CHECK(a.explanation == b.explanation);
  CHECK(a.residual_text == b.residual_text);
}

TEST_CASE("parse_taxonomy positional split") {
  auto t = parse_taxonomy("RTL; rare-sequence trigger; datapath; small footprint");
  CHECK(t.design_phase == "RTL");
  CHECK(t.activation_and_effects == "rare-sequence trigger");
  CHECK(t.location == "datapath");
  CHECK(t.characteristics == "small footprint");
}

TEST_CASE("parse_taxonomy degenerate inputs") {
  auto empty = parse_taxonomy("");
  CHECK(empty.design_phase.empty());
  CHECK(empty.raw.empty());
  CHECK(empty.empty());

  auto one = parse_taxonomy("RTL only");
  CHECK(one.design_phase == "RTL only");
  CHECK(one.activation_and_effects.empty());
  CHECK(one.location.empty());
  CHECK_FALSE(one.empty());
}

TEST_CASE("parse_taxonomy preserves raw verbatim") {
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    int len = static_cast<int>(rng() % 40);
    for (int k = 0; k < len; ++k) s += static_cast<char>(' ' + rng() % 94);
    CHECK(parse_taxonomy(s).raw == s);
  }
}

TEST_CASE("validate_rtl_shape accepts a listing-style module") {
  std::string code =
      "module aes_128(clk, reset, secret_trigger, state, key, out, trojan_out);\n"
      "  input clk, reset;\n"
      "  input secret_trigger; // New trigger input\n"
      "  input [127:0] state, key;\n"
      "  output [127:0] out;\n"
      "  output [127:0] trojan_out; // New output for leaked data\n"
      "  reg [127:0] t_state;\n"
      "  always @(posedge clk) begin\n"
      "    if (secret_trigger) t_state <= key;\n"
      "  end\n"
      "  assign trojan_out = t_state;\n"
      "endmodule\n";
  auto warnings = validate_rtl_shape(code, "aes_128");
  CHECK(warnings.empty());
}

TEST_CASE("validate_rtl_shape flags imbalance") {
  auto warnings = validate_rtl_shape("module a;\nmodule b;\nendmodule\n", "a");
  REQUIRE_FALSE(warnings.empty());
  CHECK(warnings[0].find("imbalance") != std::string::npos);
}

TEST_CASE("validate_rtl_shape flags missing top and sim-only constructs") {
  auto w1 = validate_rtl_shape("module other;\nendmodule\n", "top");
  bool missing_top = false;
  for (const auto& w : w1) missing_top |= w.find("'top' not declared") != std::string::npos;
  CHECK(missing_top);

  auto w2 = validate_rtl_shape("module t;\ninitial begin #10 x = 1; end\nendmodule\n", "t");
  bool has_initial = false, has_delay = false;
  for (const auto& w : w2) {
    has_initial |= w.find("initial") != std::string::npos;
    has_delay |= w.find("delay") != std::string::npos;
  }
  CHECK(has_initial);
  CHECK(has_delay);
}

TEST_CASE("comments and strings do not confuse the scanner") {
  std::string code =
      "// module fake_one;\n"
      "/* module fake_two; */\n"
      "module real_one;\n"
      "  reg [8*5:1] s;\n"
      "  always @(posedge c) s <= \"module\";\n"
      "endmodule\n";
  auto mods = declared_modules(code);
  REQUIRE(mods.size() == 1);
  CHECK(mods[0] == "real_one");
  auto warnings = validate_rtl_shape(code, "real_one");
  CHECK(warnings.empty());
}

TEST_CASE("module_input_ports reads ANSI and classic declarations") {
  std::string ansi =
      "module m(input wire clk, input [3:0] addr, input wire a, b, output reg q);\nendmodule\n";
  auto ports = module_input_ports(ansi, "m");
  REQUIRE(ports.size() == 4);
  CHECK(ports[0] == "clk");
  CHECK(ports[1] == "addr");
  CHECK(ports[2] == "a");
  CHECK(ports[3] == "b");

  std::string classic =
      "module n(clk, d, q);\n  input clk;\n  input [7:0] d;\n  output q;\nendmodule\n";
  auto classic_ports = module_input_ports(classic, "n");
  REQUIRE(classic_ports.size() == 2);
  CHECK(classic_ports[0] == "clk");
  CHECK(classic_ports[1] == "d");

  CHECK(module_input_ports(ansi, "absent").empty());
}

TEST_CASE("reassembly holds across generated layout permutations") {
  // Small in-suite version of the acceptance property.
  std::mt19937 rng(99);
  const char* fences[] = {"", "```", "```verilog"};
  for (int i = 0; i < 100; ++i) {
    std::string code = "module gen_" + std::to_string(i) + "(input a);\nendmodule";
    std::string code_block;
    int style = rng() % 3;
    if (style == 0) code_block = "Code: <" + code + ">\n";
    else if (style == 1) code_block = std::string("Code:\n") + fences[1 + rng() % 2] + "\n" + code + "\n```\n";
    else code_block = code + "\n";

    std::vector<std::string> parts{code_block};
    if (rng() % 2) parts.push_back("Explanation: trigger then payload " + std::to_string(rng() % 100) + "\n");
    if (rng() % 2) parts.push_back("Taxonomy: RTL; t; l; c\n");
    if (rng() % 2) parts.push_back("Some trailing commentary.\n");
    std::shuffle(parts.begin() + (style == 2 ? 1 : 0), parts.end(), rng);

    std::string text;
    for (const auto& p : parts) text += p;
    CAPTURE(text);
    auto art = extract_sections(text);
    CHECK_FALSE(art.infected_rtl.empty());
    check_reassembly(text, art);
  }
}

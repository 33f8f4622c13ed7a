// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the text-heavy hot paths: response extraction, log
// normalization, prompt templating, and metrics aggregation.

#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "htlab/extract.hpp"
#include "htlab/gauntlet.hpp"
#include "htlab/metrics.hpp"
#include "htlab/text.hpp"

using namespace htlab;

namespace {

std::string synthetic_response(int code_lines) {
  std::ostringstream out;
  out << "Code: <\nmodule bench_unit(input clk, output reg [31:0] q);\n";
  for (int i = 0; i < code_lines; ++i)
    out << "  wire w" << i << " = a" << (i % 7) << " ^ b" << (i % 5) << ";\n";
  out << "endmodule\n>\n"
      << "Explanation: a rare counter trigger arms a payload that flips the "
         "accumulator output.\n"
      << "Taxonomy: RTL; counter trigger; datapath; small footprint\n";
  return out.str();
}

std::string synthetic_log(int lines) {
  std::ostringstream out;
  out << "VCD info: dumpfile dump.vcd opened for output.\n";
  for (int i = 0; i < lines; ++i)
    out << (i * 10) << " READ a=" << (i % 16) << " d=" << (i % 251) << " r=1\n";
  out << "TB_DONE\n";
  return out.str();
}

void BM_extract_sections(benchmark::State& state) {
  std::string response = synthetic_response(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto art = extract_sections(response);
    benchmark::DoNotOptimize(art.infected_rtl.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(response.size()));
}
BENCHMARK(BM_extract_sections)->Arg(64)->Arg(1024);

void BM_normalize_sim_log(benchmark::State& state) {
  std::string log = synthetic_log(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    std::string n = normalize_sim_log(log);
    benchmark::DoNotOptimize(n.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(log.size()));
}
BENCHMARK(BM_normalize_sim_log)->Arg(256)->Arg(4096);

void BM_render_template(benchmark::State& state) {
  std::string body(static_cast<size_t>(state.range(0)), 'x');
  std::string tpl = "prefix {design_code} suffix {ht_type}";
  std::map<std::string, std::string> values{{"design_code", body}, {"ht_type", "HT2"}};
  for (auto _ : state) {
    std::string r = render_template(tpl, values);
    benchmark::DoNotOptimize(r.data());
  }
}
BENCHMARK(BM_render_template)->Arg(1024)->Arg(65536);

void BM_fingerprint(benchmark::State& state) {
  std::string text(static_cast<size_t>(state.range(0)), 'p');
  for (auto _ : state) {
    std::string h = fnv1a64_hex(text);
    benchmark::DoNotOptimize(h.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_fingerprint)->Arg(4096)->Arg(1 << 20);

void BM_compute_rates(benchmark::State& state) {
  std::vector<EvalRecord> records;
  std::mt19937 rng(7);
  const char* patterns[] = {"PPPP", "PPPX", "PPX", "PX", "X"};
  for (int i = 0; i < state.range(0); ++i) {
    EvalRecord r;
    r.design_id = "d" + std::to_string(i);
    r.model_id = "m";
    r.ht_type = kAllHTTypes[i % 3];
    std::string pattern = patterns[rng() % 5];
    const Stage order[] = {Stage::eval0, Stage::eval1, Stage::eval2, Stage::eval3};
    for (size_t k = 0; k < pattern.size(); ++k) {
      StageOutcome o;
      o.stage = order[k];
      o.passed = pattern[k] == 'P';
      r.outcomes[order[k]] = o;
      if (!o.passed) break;
    }
    records.push_back(std::move(r));
  }
  for (auto _ : state) {
    MetricsSummary m = compute_rates(records);
    benchmark::DoNotOptimize(&m);
  }
}
BENCHMARK(BM_compute_rates)->Arg(27)->Arg(1000);

void BM_parse_cell_count(benchmark::State& state) {
  std::ostringstream stats;
  stats << "=== top ===\n";
  for (int i = 0; i < 40; ++i) stats << "   Number of wires: " << i * 3 << "\n";
  stats << "   Number of cells:              169424\n";
  std::string block = stats.str();
  for (auto _ : state) {
    long n = parse_cell_count(block);
    benchmark::DoNotOptimize(n);
  }
}
BENCHMARK(BM_parse_cell_count);

}  // namespace

BENCHMARK_MAIN();

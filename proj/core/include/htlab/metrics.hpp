// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "htlab/gauntlet.hpp"
#include "htlab/orchestrator.hpp"

namespace htlab {

/// The four success rates plus their underlying counts. A rate is absent
/// whenever its denominator is zero; reports render that as "—", never 0%.
struct MetricsSummary {
  long total = 0;
  long compiled = 0;
  long functional = 0;
  long activated = 0;
  long post_synth = 0;
  std::optional<double> eval0_rate;  // compiled / total
  std::optional<double> eval1_rate;  // functional / compiled
  std::optional<double> eval2_rate;  // activated / functional
  std::optional<double> eval3_rate;  // post_synth / activated
};

/// Counts stage outcomes and derives the four rates. Re-asserts the
/// gating invariant on every record (Errc::invalid_argument otherwise).
MetricsSummary compute_rates(const std::vector<EvalRecord>& records);

/// Cell-count overhead in percent: 100 * (infected - free) / free,
/// reported at two decimals. Throws Errc::zero_baseline when free == 0.
double compute_overhead(long free_cells, long infected_cells);

/// Rate as a one-decimal percent string ("88.9"); "—" when absent.
std::string format_rate(const std::optional<double>& rate);

struct DetectionRecord {
  std::string design_id;
  HTType ht_type = HTType::HT1_change_functionality;
  std::string model_id;
  DetectionOutcome outcome;
};

struct CampaignResults {
  std::vector<JobResult> jobs;
  std::vector<DetectionRecord> detections;
};

/// Plain-text campaign report: one survival-matrix row per job with
/// C/U/T/S marks, cell counts, overhead and trigger type, a four-rate
/// block per model, and a detection section when detector runs exist.
std::string render_report(const CampaignResults& results);

/// Machine-readable twin of the text report.
std::string render_report_json(const CampaignResults& results);

/// Versioned, lossless round-trip of campaign results.
void persist_results(const CampaignResults& results, const std::filesystem::path& path);
CampaignResults load_results(const std::filesystem::path& path);

inline constexpr int kResultsSchemaVersion = 1;

}  // namespace htlab

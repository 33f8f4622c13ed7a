// SPDX-License-Identifier: Apache-2.0
#include "htlab/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "htlab/errors.hpp"
#include "htlab/serialize.hpp"
#include "htlab/text.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace htlab {

MetricsSummary compute_rates(const std::vector<EvalRecord>& records) {
  MetricsSummary m;
  m.total = static_cast<long>(records.size());
  for (const auto& r : records) {
    if (!gating_valid(r))
      throw Error(Errc::invalid_argument,
                  "record " + r.design_id + "/" + to_string(r.ht_type) + "/" + r.model_id +
                      " violates stage gating");
    if (r.stage_passed(Stage::eval0)) ++m.compiled;
    if (r.stage_passed(Stage::eval1)) ++m.functional;
    if (r.stage_passed(Stage::eval2)) ++m.activated;
    if (r.stage_passed(Stage::eval3)) ++m.post_synth;
  }
  if (m.total > 0) m.eval0_rate = static_cast<double>(m.compiled) / m.total;
  if (m.compiled > 0) m.eval1_rate = static_cast<double>(m.functional) / m.compiled;
  if (m.functional > 0) m.eval2_rate = static_cast<double>(m.activated) / m.functional;
  if (m.activated > 0) m.eval3_rate = static_cast<double>(m.post_synth) / m.activated;
  return m;
}

double compute_overhead(long free_cells, long infected_cells) {
  if (free_cells <= 0)
    throw Error(Errc::zero_baseline, "clean cell count must be positive, got " +
                                         std::to_string(free_cells));
  double pct = 100.0 * (static_cast<double>(infected_cells) - static_cast<double>(free_cells)) /
               static_cast<double>(free_cells);
  return round_half_up(pct, 2);
}

std::string format_rate(const std::optional<double>& rate) {
  if (!rate) return "—";
  return format_fixed(*rate * 100.0, 1) + "%";
}

namespace {

std::string mark(const EvalRecord& r, Stage s) {
  auto it = r.outcomes.find(s);
  if (it == r.outcomes.end()) return "—";
  return it->second.passed ? "✓" : "×";
}

std::string pad(const std::string& s, size_t width) {
  // Multibyte glyphs (✓ × —) count as one column.
  size_t cols = 0;
  for (size_t i = 0; i < s.size();) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    i += c < 0x80 ? 1 : (c < 0xE0 ? 2 : (c < 0xF0 ? 3 : 4));
    ++cols;
  }
  std::string out = s;
  while (cols++ < width) out += ' ';
  return out;
}

std::string cells_column(const EvalRecord& r) {
  if (!r.cell_count_free || !r.cell_count_infected) return "—";
  return std::to_string(*r.cell_count_free) + "/" + std::to_string(*r.cell_count_infected);
}

std::string overhead_column(const EvalRecord& r) {
  if (!r.cell_count_free || !r.cell_count_infected || *r.cell_count_free <= 0) return "—";
  return format_fixed(compute_overhead(*r.cell_count_free, *r.cell_count_infected), 2) + "%";
}

std::string trigger_column(const EvalRecord& r) {
  switch (r.trigger_kind) {
    case TriggerKind::internal: return "Int.";
    case TriggerKind::external: return "Ext.";
    case TriggerKind::unknown: return "?";
  }
  return "?";
}

std::string fmt_mmss(std::chrono::milliseconds ms) {
  long total_s = ms.count() / 1000;
  long tenths = (ms.count() % 1000) / 100;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02ld:%02ld.%ld", total_s / 60, total_s % 60, tenths);
  return buf;
}

}  // namespace

std::string render_report(const CampaignResults& results) {
  std::ostringstream out;
  out << pad("Model", 18) << pad("Design", 12) << pad("HT", 5) << pad("C", 3) << pad("U", 3)
      << pad("T", 3) << pad("S", 3) << pad("Cells (free/inf)", 18) << pad("Overhead", 10)
      << pad("Trigger", 8) << "Status\n";
  out << std::string(90, '-') << "\n";

  // Group jobs per model, preserving first-seen order.
  std::vector<std::string> model_order;
  std::map<std::string, std::vector<const JobResult*>> by_model;
  for (const auto& job : results.jobs) {
    if (!by_model.count(job.model_id)) model_order.push_back(job.model_id);
    by_model[job.model_id].push_back(&job);
  }

  for (const auto& model : model_order) {
    std::vector<EvalRecord> records;
    for (const JobResult* job : by_model[model]) {
      if (job->eval_record) {
        const EvalRecord& r = *job->eval_record;
        records.push_back(r);
        out << pad(model, 18) << pad(r.design_id, 12) << pad(to_string(r.ht_type), 5)
            << pad(mark(r, Stage::eval0), 3) << pad(mark(r, Stage::eval1), 3)
            << pad(mark(r, Stage::eval2), 3) << pad(mark(r, Stage::eval3), 3)
            << pad(cells_column(r), 18) << pad(overhead_column(r), 10)
            << pad(trigger_column(r), 8) << to_string(job->status) << "\n";
      } else {
        out << pad(model, 18) << pad(job->design_id, 12) << pad(to_string(job->ht_type), 5)
            << pad("—", 3) << pad("—", 3) << pad("—", 3) << pad("—", 3) << pad("—", 18)
            << pad("—", 10) << pad("—", 8) << to_string(job->status)
            << (job->error.empty() ? "" : "  [" + job->error + "]") << "\n";
      }
    }
    MetricsSummary m = compute_rates(records);
    out << pad("  " + model + " metrics", 35) << "E0: " << format_rate(m.eval0_rate)
        << "  E1: " << format_rate(m.eval1_rate) << "  E2: " << format_rate(m.eval2_rate)
        << "  E3: " << format_rate(m.eval3_rate) << "\n";
    out << std::string(90, '-') << "\n";
  }

  if (!results.detections.empty()) {
    out << "\nDetector runs\n";
    out << pad("Model", 18) << pad("Design", 12) << pad("HT", 5) << pad("Verdict", 14)
        << "Inference time\n";
    out << std::string(60, '-') << "\n";
    for (const auto& d : results.detections) {
      std::string verdict;
      switch (d.outcome.verdict) {
        case DetectionVerdict::detected: verdict = "Detected"; break;
        case DetectionVerdict::not_detected: verdict = "Not detected"; break;
        case DetectionVerdict::timed_out: verdict = "Timed out"; break;
        case DetectionVerdict::error: verdict = "Error"; break;
      }
      out << pad(d.model_id, 18) << pad(d.design_id, 12) << pad(to_string(d.ht_type), 5)
          << pad(verdict, 14)
          << (d.outcome.verdict == DetectionVerdict::timed_out ? "> timeout"
                                                               : fmt_mmss(d.outcome.inference_time))
          << "\n";
    }
  }
  return out.str();
}

std::string render_report_json(const CampaignResults& results) {
  json j;
  j["rows"] = json::array();
  std::vector<std::string> model_order;
  std::map<std::string, std::vector<EvalRecord>> by_model;
  for (const auto& job : results.jobs) {
    json row;
    row["model_id"] = job.model_id;
    row["design_id"] = job.design_id;
    row["ht_type"] = to_string(job.ht_type);
    row["status"] = to_string(job.status);
    if (job.eval_record) {
      const EvalRecord& r = *job.eval_record;
      row["stages"] = json{{"eval0", mark(r, Stage::eval0)},
                           {"eval1", mark(r, Stage::eval1)},
                           {"eval2", mark(r, Stage::eval2)},
                           {"eval3", mark(r, Stage::eval3)}};
      if (r.cell_count_free && r.cell_count_infected) {
        row["cell_count_free"] = *r.cell_count_free;
        row["cell_count_infected"] = *r.cell_count_infected;
        if (*r.cell_count_free > 0)
          row["overhead_pct"] = compute_overhead(*r.cell_count_free, *r.cell_count_infected);
      }
      row["trigger_kind"] = to_string(r.trigger_kind);
      if (!by_model.count(job.model_id)) model_order.push_back(job.model_id);
      by_model[job.model_id].push_back(r);
    }
    j["rows"].push_back(row);
  }
  j["metrics"] = json::object();
  for (const auto& model : model_order) {
    MetricsSummary m = compute_rates(by_model[model]);
    json mj;
    mj["total"] = m.total;
    mj["compiled"] = m.compiled;
    mj["functional"] = m.functional;
    mj["activated"] = m.activated;
    mj["post_synth"] = m.post_synth;
    mj["eval0_rate"] = m.eval0_rate ? json(round_half_up(*m.eval0_rate * 100.0, 1)) : json();
    mj["eval1_rate"] = m.eval1_rate ? json(round_half_up(*m.eval1_rate * 100.0, 1)) : json();
    mj["eval2_rate"] = m.eval2_rate ? json(round_half_up(*m.eval2_rate * 100.0, 1)) : json();
    mj["eval3_rate"] = m.eval3_rate ? json(round_half_up(*m.eval3_rate * 100.0, 1)) : json();
    j["metrics"][model] = mj;
  }
  if (!results.detections.empty()) j["detections"] = results.detections;
  return j.dump(2) + "\n";
}

void persist_results(const CampaignResults& results, const fs::path& path) {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["jobs"] = results.jobs;
  j["detections"] = results.detections;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

CampaignResults load_results(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw Error(Errc::io_failure, path.string() + ": " + e.what());
  }
  int version = j.value("schema_version", -1);
  if (version != kResultsSchemaVersion)
    throw Error(Errc::schema_version_mismatch,
                path.string() + ": schema_version " + std::to_string(version) +
                    ", supported " + std::to_string(kResultsSchemaVersion));
  CampaignResults results;
  for (const auto& job : j.value("jobs", json::array()))
    results.jobs.push_back(job.get<JobResult>());
  for (const auto& det : j.value("detections", json::array()))
    results.detections.push_back(det.get<DetectionRecord>());
  return results;
}

}  // namespace htlab

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "htlab/extract.hpp"
#include "htlab/types.hpp"

namespace htlab {

/// A clean RTL unit as registered from its manifest. All paths are
/// absolute and verified to exist at load time.
struct Design {
  std::string id;
  std::string name;
  Difficulty difficulty = Difficulty::easy;
  std::string top_module;
  std::vector<std::filesystem::path> rtl_files;
  std::filesystem::path original_testbench;
  std::optional<std::filesystem::path> trigger_testbench;
  std::optional<std::filesystem::path> golden_log;
  int line_count = 0;

  /// Concatenated contents of rtl_files, in manifest order.
  std::string read_rtl() const;
};

struct EvalRecord;  // gauntlet.hpp

struct BenchmarkEntry {
  std::string design_id;
  HTType ht_type = HTType::HT1_change_functionality;
  std::string model_id;
  std::vector<std::filesystem::path> infected_rtl;
  std::string explanation;
  Taxonomy taxonomy;
  std::string eval_record_ref;  // relative path of the exported eval record
  std::string created_at;
};

/// Registry and on-disk store for clean designs and exported benchmarks.
/// Reads are shareable across threads; mutating operations (register,
/// export) serialize through a writer lock.
class DesignRegistry {
public:
  /// Opens (creating if needed) a registry rooted at `root`.
  explicit DesignRegistry(std::filesystem::path root);

  /// Validates and stores the design described by a manifest file.
  /// Idempotent for byte-identical content; a same-name manifest with
  /// different content is rejected (Errc::duplicate_name).
  Design register_design(const std::filesystem::path& manifest_path);

  /// Summaries ordered by name, optionally restricted to one difficulty.
  std::vector<Design> list_designs(std::optional<Difficulty> filter = {}) const;

  Design get_design(const std::string& id) const;
  bool has_design(const std::string& id) const;

  /// Writes a survived trojan (all four gauntlet stages passed) into the
  /// benchmark store and updates the index. Last writer wins for a given
  /// (design, ht_type, model) key. Throws Errc::not_survived otherwise.
  BenchmarkEntry export_benchmark(const EvalRecord& record, const ExtractedArtifact& artifact);

  std::vector<BenchmarkEntry> benchmark_index() const;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path benchmarks_dir() const { return root_ / "benchmarks"; }
  /// Scratch area for per-design golden logs and synthesis baselines.
  std::filesystem::path cache_dir(const std::string& design_id) const;

private:
  std::filesystem::path design_dir(const std::string& id) const;
  Design load_design_locked(const std::string& id) const;

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
};

/// Parses a manifest without registering it (paths resolved relative to
/// the manifest's directory; existence checks applied).
Design parse_manifest(const std::filesystem::path& manifest_path);

}  // namespace htlab

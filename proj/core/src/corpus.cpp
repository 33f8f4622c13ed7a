// SPDX-License-Identifier: Apache-2.0
#include "htlab/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "htlab/errors.hpp"
#include "htlab/gauntlet.hpp"
#include "htlab/serialize.hpp"
#include "htlab/text.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace htlab {

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
  fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_failure, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  fs::rename(tmp, p);
}

int count_lines(std::string_view text) {
  if (text.empty()) return 0;
  int n = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
  if (text.back() != '\n') ++n;
  return n;
}

std::string slug(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  if (out.empty()) throw Error(Errc::manifest_parse, "design name yields empty id");
  return out;
}

// Content fingerprint over the normalized manifest plus every referenced file.
std::string design_content_hash(const Design& d) {
  std::string acc = d.name + "|" + to_string(d.difficulty) + "|" + d.top_module;
  for (const auto& f : d.rtl_files) acc += "|rtl:" + read_file(f);
  acc += "|tb:" + read_file(d.original_testbench);
  if (d.trigger_testbench) acc += "|trig:" + read_file(*d.trigger_testbench);
  if (d.golden_log) acc += "|gold:" + read_file(*d.golden_log);
  return fnv1a64_hex(acc);
}

fs::path require_file(const fs::path& base, const std::string& rel, const char* what) {
  fs::path p = rel;
  if (p.is_relative()) p = base / p;
  p = p.lexically_normal();
  if (!fs::exists(p))
    throw Error(Errc::missing_file, std::string(what) + " not found: " + p.string());
  return p;
}

}  // namespace

std::string Design::read_rtl() const {
  std::string all;
  for (const auto& f : rtl_files) {
    try {
      all += read_file(f);
    } catch (const Error&) {
      throw Error(Errc::design_read, "cannot read RTL file " + f.string());
    }
  }
  return all;
}

Design parse_manifest(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path))
    throw Error(Errc::missing_file, "manifest not found: " + manifest_path.string());
  json j;
  try {
    j = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw Error(Errc::manifest_parse, manifest_path.string() + ": " + e.what());
  }

  Design d;
  try {
    d.name = j.at("name").get<std::string>();
    d.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
    d.top_module = j.at("top_module").get<std::string>();
    for (const auto& f : j.at("rtl_files")) d.rtl_files.push_back(f.get<std::string>());
  } catch (const json::exception& e) {
    throw Error(Errc::manifest_parse, manifest_path.string() + ": " + e.what());
  }
  if (d.top_module.empty())
    throw Error(Errc::manifest_parse, "top_module is empty");
  if (d.rtl_files.empty())
    throw Error(Errc::missing_file, "manifest lists no rtl_files");

  fs::path base = fs::absolute(manifest_path).parent_path();
  std::vector<fs::path> resolved;
  for (const auto& f : d.rtl_files)
    resolved.push_back(require_file(base, f.string(), "rtl file"));
  d.rtl_files = std::move(resolved);

  if (!j.contains("original_testbench"))
    throw Error(Errc::manifest_parse, "manifest missing original_testbench");
  d.original_testbench =
      require_file(base, j.at("original_testbench").get<std::string>(), "testbench");
  if (j.contains("trigger_testbench") && !j.at("trigger_testbench").is_null())
    d.trigger_testbench =
        require_file(base, j.at("trigger_testbench").get<std::string>(), "trigger testbench");
  if (j.contains("golden_log") && !j.at("golden_log").is_null())
    d.golden_log = require_file(base, j.at("golden_log").get<std::string>(), "golden log");

  std::string rtl = d.read_rtl();
  d.line_count = count_lines(rtl);

  auto modules = declared_modules(rtl);
  if (std::find(modules.begin(), modules.end(), d.top_module) == modules.end())
    throw Error(Errc::manifest_parse,
                "top module '" + d.top_module + "' not declared in rtl_files");

  d.id = slug(d.name);
  return d;
}

DesignRegistry::DesignRegistry(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "designs");
}

fs::path DesignRegistry::design_dir(const std::string& id) const {
  return root_ / "designs" / id;
}

fs::path DesignRegistry::cache_dir(const std::string& design_id) const {
  return root_ / "cache" / design_id;
}

Design DesignRegistry::register_design(const fs::path& manifest_path) {
  Design incoming = parse_manifest(manifest_path);
  std::string hash = design_content_hash(incoming);

  std::unique_lock lock(mutex_);
  fs::path dir = design_dir(incoming.id);
  fs::path meta_path = dir / "meta.json";
  if (fs::exists(meta_path)) {
    json meta = json::parse(read_file(meta_path));
    if (meta.value("content_hash", "") != hash)
      throw Error(Errc::duplicate_name,
                  "design '" + incoming.name + "' already registered with different content");
    return load_design_locked(incoming.id);
  }

  // Copy the unit into the store so the registry is self-contained.
  fs::create_directories(dir / "src");
  Design stored = incoming;
  auto copy_in = [&](const fs::path& srcp) {
    fs::path dst = dir / "src" / srcp.filename();
    write_file(dst, read_file(srcp));
    return dst;
  };
  stored.rtl_files.clear();
  json manifest;
  manifest["name"] = stored.name;
  manifest["difficulty"] = to_string(stored.difficulty);
  manifest["top_module"] = stored.top_module;
  manifest["rtl_files"] = json::array();
  for (const auto& f : incoming.rtl_files) {
    fs::path dst = copy_in(f);
    stored.rtl_files.push_back(dst);
    manifest["rtl_files"].push_back(("src" / dst.filename()).string());
  }
  stored.original_testbench = copy_in(incoming.original_testbench);
  manifest["original_testbench"] = ("src" / stored.original_testbench.filename()).string();
  if (incoming.trigger_testbench) {
    stored.trigger_testbench = copy_in(*incoming.trigger_testbench);
    manifest["trigger_testbench"] = ("src" / stored.trigger_testbench->filename()).string();
  }
  if (incoming.golden_log) {
    stored.golden_log = copy_in(*incoming.golden_log);
    manifest["golden_log"] = ("src" / stored.golden_log->filename()).string();
  }
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  json meta;
  meta["content_hash"] = hash;
  meta["line_count"] = stored.line_count;
  write_file(meta_path, meta.dump(2) + "\n");
  return stored;
}

Design DesignRegistry::load_design_locked(const std::string& id) const {
  fs::path dir = design_dir(id);
  if (!fs::exists(dir / "manifest.json"))
    throw Error(Errc::config_error, "design not in registry: " + id);
  return parse_manifest(dir / "manifest.json");
}

Design DesignRegistry::get_design(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return load_design_locked(id);
}

bool DesignRegistry::has_design(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return fs::exists(design_dir(id) / "manifest.json");
}

std::vector<Design> DesignRegistry::list_designs(std::optional<Difficulty> filter) const {
  std::shared_lock lock(mutex_);
  std::vector<Design> out;
  fs::path designs = root_ / "designs";
  if (fs::exists(designs)) {
    for (const auto& entry : fs::directory_iterator(designs)) {
      if (!entry.is_directory()) continue;
      if (!fs::exists(entry.path() / "manifest.json")) continue;
      Design d = parse_manifest(entry.path() / "manifest.json");
      if (filter && d.difficulty != *filter) continue;
      out.push_back(std::move(d));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Design& a, const Design& b) { return a.name < b.name; });
  return out;
}

BenchmarkEntry DesignRegistry::export_benchmark(const EvalRecord& record,
                                                const ExtractedArtifact& artifact) {
  if (!record.survived())
    throw Error(Errc::not_survived,
                "record for " + record.design_id + "/" + to_string(record.ht_type) + "/" +
                    record.model_id + " did not pass all four stages");

  std::unique_lock lock(mutex_);
  fs::path dir =
      benchmarks_dir() / record.model_id / record.design_id / to_string(record.ht_type);
  write_file(dir / "infected.v", artifact.infected_rtl);
  write_file(dir / "explanation.txt", artifact.explanation);
  write_file(dir / "taxonomy.txt", artifact.taxonomy.raw);
  write_file(dir / "eval_record.json", json(record).dump(2) + "\n");

  BenchmarkEntry entry;
  entry.design_id = record.design_id;
  entry.ht_type = record.ht_type;
  entry.model_id = record.model_id;
  entry.infected_rtl = {dir / "infected.v"};
  entry.explanation = artifact.explanation;
  entry.taxonomy = artifact.taxonomy;
  entry.eval_record_ref =
      fs::relative(dir / "eval_record.json", benchmarks_dir()).string();
  entry.created_at = iso8601_now();

  // Index rewrite: last writer wins per (design, ht_type, model).
  fs::path index_path = benchmarks_dir() / "index.jsonl";
  std::vector<json> lines;
  if (fs::exists(index_path)) {
    for (const auto& line : split_lines(read_file(index_path))) {
      if (trim(line).empty()) continue;
      json parsed = json::parse(line);
      if (parsed.value("design_id", "") == entry.design_id &&
          parsed.value("ht_type", "") == to_string(entry.ht_type) &&
          parsed.value("model_id", "") == entry.model_id)
        continue;
      lines.push_back(std::move(parsed));
    }
  }
  lines.push_back(json(entry));
  std::string body;
  for (const auto& l : lines) body += l.dump() + "\n";
  write_file(index_path, body);
  return entry;
}

std::vector<BenchmarkEntry> DesignRegistry::benchmark_index() const {
  std::shared_lock lock(mutex_);
  std::vector<BenchmarkEntry> out;
  fs::path index_path = benchmarks_dir() / "index.jsonl";
  if (!fs::exists(index_path)) return out;
  for (const auto& line : split_lines(read_file(index_path))) {
    if (trim(line).empty()) continue;
    out.push_back(json::parse(line).get<BenchmarkEntry>());
  }
  return out;
}

}  // namespace htlab

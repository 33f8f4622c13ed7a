// SPDX-License-Identifier: Apache-2.0
#include "htlab/text.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "htlab/errors.hpp"
#include "htlab/types.hpp"

namespace htlab {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::missing_file: return "MissingFile";
    case Errc::duplicate_name: return "DuplicateName";
    case Errc::manifest_parse: return "ManifestParse";
    case Errc::not_survived: return "NotSurvived";
    case Errc::io_failure: return "IoFailure";
    case Errc::unresolved_placeholder: return "UnresolvedPlaceholder";
    case Errc::missing_ctp: return "MissingCtp";
    case Errc::design_read: return "DesignRead";
    case Errc::oversize_for_model: return "OversizeForModel";
    case Errc::empty_registry: return "EmptyRegistry";
    case Errc::auth_failure: return "AuthFailure";
    case Errc::rate_limited: return "RateLimited";
    case Errc::timeout: return "Timeout";
    case Errc::provider_error: return "ProviderError";
    case Errc::no_code_found: return "NoCodeFound";
    case Errc::config_error: return "ConfigError";
    case Errc::gateway_error: return "GatewayError";
    case Errc::tool_not_found: return "ToolNotFound";
    case Errc::golden_missing: return "GoldenMissing";
    case Errc::synth_failure: return "SynthFailure";
    case Errc::stat_parse: return "StatParse";
    case Errc::zero_baseline: return "ZeroBaseline";
    case Errc::schema_version_mismatch: return "SchemaVersionMismatch";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(pos));
      break;
    }
    lines.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  size_t pos = 0;
  while (true) {
    size_t next = text.find(sep, pos);
    if (next == std::string_view::npos) {
      parts.emplace_back(text.substr(pos));
      break;
    }
    parts.emplace_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  return parts;
}

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Returns the placeholder name if text[pos] opens `{identifier}`, else empty.
std::string placeholder_at(std::string_view text, size_t pos, size_t* end) {
  if (text[pos] != '{') return {};
  size_t i = pos + 1;
  while (i < text.size() && is_ident_char(text[i])) ++i;
  if (i == pos + 1 || i >= text.size() || text[i] != '}') return {};
  *end = i + 1;
  return std::string(text.substr(pos + 1, i - pos - 1));
}

}  // namespace

std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      size_t end = 0;
      std::string name = placeholder_at(text, i, &end);
      if (!name.empty()) {
        auto it = values.find(name);
        if (it == values.end())
          throw Error(Errc::unresolved_placeholder, "template references unknown placeholder {" + name + "}");
        out += it->second;
        i = end;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

std::vector<std::string> template_placeholders(std::string_view text) {
  std::vector<std::string> names;
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      size_t end = 0;
      std::string name = placeholder_at(text, i, &end);
      if (!name.empty()) {
        names.push_back(name);
        i = end;
        continue;
      }
    }
    ++i;
  }
  return names;
}

std::string fnv1a64_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

long estimate_tokens(std::string_view text) {
  return static_cast<long>((text.size() + 3) / 4);
}

std::string iso8601_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

double round_half_up(double value, int decimals) {
  double scale = std::pow(10.0, decimals);
  return std::floor(value * scale + 0.5) / scale;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, round_half_up(value, decimals));
  return std::string(buf);
}

std::string to_string(HTType t) {
  switch (t) {
    case HTType::HT1_change_functionality: return "HT1";
    case HTType::HT2_leak_information: return "HT2";
    case HTType::HT3_denial_of_service: return "HT3";
  }
  return "HT?";
}

std::string long_name(HTType t) {
  switch (t) {
    case HTType::HT1_change_functionality: return "change_functionality";
    case HTType::HT2_leak_information: return "leak_information";
    case HTType::HT3_denial_of_service: return "denial_of_service";
  }
  return "unknown";
}

HTType ht_type_from_string(std::string_view s) {
  std::string l = to_lower(trim(s));
  if (l == "ht1" || l == "ht1_change_functionality" || l == "change_functionality")
    return HTType::HT1_change_functionality;
  if (l == "ht2" || l == "ht2_leak_information" || l == "leak_information")
    return HTType::HT2_leak_information;
  if (l == "ht3" || l == "ht3_denial_of_service" || l == "denial_of_service")
    return HTType::HT3_denial_of_service;
  throw Error(Errc::invalid_argument, "unknown HT type: " + std::string(s));
}

std::string to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
  }
  return "easy";
}

Difficulty difficulty_from_string(std::string_view s) {
  std::string l = to_lower(trim(s));
  if (l == "easy") return Difficulty::easy;
  if (l == "medium") return Difficulty::medium;
  if (l == "hard") return Difficulty::hard;
  throw Error(Errc::invalid_argument, "unknown difficulty: " + std::string(s));
}

}  // namespace htlab

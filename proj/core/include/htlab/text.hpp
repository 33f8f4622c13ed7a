// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace htlab {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool starts_with_ci(std::string_view text, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

/// Substitutes `{name}` placeholders in a single left-to-right pass.
/// A brace group whose content is not an identifier (e.g. Verilog `{a, b}`)
/// is left untouched; an identifier group with no mapping throws
/// Errc::unresolved_placeholder. Substituted values are never rescanned.
std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& values);

/// Lists the identifier-shaped placeholders a template references.
std::vector<std::string> template_placeholders(std::string_view text);

/// FNV-1a 64-bit over the raw bytes, rendered as 16 hex digits.
/// Stable across platforms; used for prompt fingerprints and cache keys.
std::string fnv1a64_hex(std::string_view data);

/// Provider-neutral token estimate: ceil(bytes / 4).
long estimate_tokens(std::string_view text);

/// Current UTC time as ISO-8601 (seconds resolution).
std::string iso8601_now();

/// Percentage rounding used throughout reports: round-half-up at
/// `decimals` fractional digits.
double round_half_up(double value, int decimals);
std::string format_fixed(double value, int decimals);

}  // namespace htlab

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace htlab {

/// The three hardware-trojan behavior classes handled by the harness.
/// The set is closed; every prompt library and report keys off these.
enum class HTType {
  HT1_change_functionality,
  HT2_leak_information,
  HT3_denial_of_service,
};

inline constexpr HTType kAllHTTypes[] = {
    HTType::HT1_change_functionality,
    HTType::HT2_leak_information,
    HTType::HT3_denial_of_service,
};

enum class Difficulty { easy, medium, hard };

std::string to_string(HTType t);        // "HT1" / "HT2" / "HT3"
std::string long_name(HTType t);        // "change_functionality" etc.
HTType ht_type_from_string(std::string_view s);  // accepts "HT1", "ht2", ...

std::string to_string(Difficulty d);
Difficulty difficulty_from_string(std::string_view s);

}  // namespace htlab

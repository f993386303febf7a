#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace dvrisk {

using Date = std::chrono::sys_days;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD); throws InvalidArgument.
Date parse_date(std::string_view text);

std::string format_date(Date date);

/// Calendar-day difference later - earlier.
inline long days_between(Date earlier, Date later) { return (later - earlier).count(); }

}  // namespace dvrisk

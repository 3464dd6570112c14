#pragma once

// UTC timestamp handling on plain epoch seconds. Accepts the strict ISO-8601
// subset "YYYY-MM-DDTHH:MM:SS" followed by "Z" or a "+HH:MM"/"-HH:MM" offset;
// everything is normalized to UTC on parse.

#include <cstdint>
#include <string>

namespace zk {

using UtcSeconds = std::int64_t;

// Days since 1970-01-01 for a proleptic Gregorian civil date (negative before
// the epoch). Throws std::invalid_argument on an impossible date.
std::int64_t days_from_civil(int year, int month, int day);

// Inverse of days_from_civil.
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

// Day of week for an epoch-day count, Monday = 0 .. Sunday = 6.
int day_of_week_mon0(std::int64_t days);

// Parse the strict subset above; throws std::invalid_argument naming the
// defect for anything else (wrong shape, out-of-range fields, bad offset).
UtcSeconds parse_iso8601(const std::string& text);

// Render as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601_utc(UtcSeconds t);

}  // namespace zk

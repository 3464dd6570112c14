#include <doctest.h>

#include <stdexcept>

#include "zombiekit/time.hpp"

using namespace zk;

TEST_CASE("days_from_civil pins the epoch and round trips") {
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(days_from_civil(1970, 1, 2) == 1);
  CHECK(days_from_civil(1969, 12, 31) == -1);
  // 2024-01-01 is 19723 days after the epoch (13 leap days in 1972..2020
  // plus 2024? no: 1972,76,...,2020 = 13 leaps; 54*365 + 13 = 19723).
  CHECK(days_from_civil(2024, 1, 1) == 19723);

  for (std::int64_t d : {-1000000LL, -1LL, 0LL, 1LL, 365LL, 19723LL, 2500000LL}) {
    int y, m, day;
    civil_from_days(d, y, m, day);
    CHECK(days_from_civil(y, m, day) == d);
  }

  CHECK_THROWS_AS(days_from_civil(2023, 2, 29), std::invalid_argument);
  CHECK_THROWS_AS(days_from_civil(2024, 13, 1), std::invalid_argument);
  CHECK_THROWS_AS(days_from_civil(2024, 0, 1), std::invalid_argument);
  CHECK_NOTHROW(days_from_civil(2024, 2, 29));  // leap year
}

TEST_CASE("day_of_week_mon0: 1970-01-01 was a Thursday") {
  CHECK(day_of_week_mon0(0) == 3);
  CHECK(day_of_week_mon0(days_from_civil(2024, 1, 1)) == 0);  // Monday
  CHECK(day_of_week_mon0(days_from_civil(2024, 1, 7)) == 6);  // Sunday
  CHECK(day_of_week_mon0(-1) == 2);                           // Wednesday
}

TEST_CASE("parse_iso8601 accepts the strict subset and normalizes offsets") {
  CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_iso8601("2024-01-01T00:00:00Z") == 19723LL * 86400);
  // +09:00 means the local clock is ahead: subtract to reach UTC.
  CHECK(parse_iso8601("2024-01-01T09:00:00+09:00") == 19723LL * 86400);
  CHECK(parse_iso8601("2023-12-31T19:30:00-04:30") == 19723LL * 86400);
  CHECK(parse_iso8601("1969-12-31T23:59:59Z") == -1);

  for (const char* bad :
       {"2024-01-01", "2024-01-01 00:00:00Z", "2024-01-01T00:00:00",
        "2024-13-01T00:00:00Z", "2024-01-32T00:00:00Z",
        "2024-01-01T24:00:00Z", "2024-01-01T00:60:00Z",
        "2024-01-01T00:00:00+9:00", "2024-01-01T00:00:00+0900", "",
        "not a date"}) {
    CHECK_THROWS_AS(parse_iso8601(bad), std::invalid_argument);
  }
}

TEST_CASE("format_iso8601_utc round trips") {
  for (UtcSeconds t : {UtcSeconds(0), UtcSeconds(19723LL * 86400 + 3661),
                       UtcSeconds(-1), UtcSeconds(86399)}) {
    CHECK(parse_iso8601(format_iso8601_utc(t)) == t);
  }
  CHECK(format_iso8601_utc(0) == "1970-01-01T00:00:00Z");
  CHECK(format_iso8601_utc(19723LL * 86400) == "2024-01-01T00:00:00Z");
}

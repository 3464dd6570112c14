#include "zombiekit/time.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

namespace zk {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> base = {31, 28, 31, 30, 31, 30,
                                               31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return base[m - 1];
}

[[noreturn]] void bad(const std::string& what, const std::string& text) {
  throw std::invalid_argument("invalid timestamp: " + what + " in \"" + text +
                              "\"");
}

// Parse exactly `n` ASCII digits starting at text[pos].
int digits(const std::string& text, size_t pos, int n) {
  int v = 0;
  for (int i = 0; i < n; ++i) {
    char c = pos + i < text.size() ? text[pos + i] : '\0';
    if (c < '0' || c > '9') bad("expected digit", text);
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

std::int64_t days_from_civil(int y, int m, int d) {
  if (m < 1 || m > 12) throw std::invalid_argument("month out of range");
  if (d < 1 || d > days_in_month(y, m))
    throw std::invalid_argument("day out of range");
  // Howard Hinnant's algorithm, era = 400-year block.
  std::int64_t yy = y - (m <= 2);
  std::int64_t era = (yy >= 0 ? yy : yy - 399) / 400;
  std::int64_t yoe = yy - era * 400;                           // [0, 399]
  std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;    // [0, 146096]
  return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
  z += 719468;
  std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  std::int64_t doe = z - era * 146097;
  std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t y = yoe + era * 400;
  std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  std::int64_t mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  year = static_cast<int>(y + (month <= 2));
}

int day_of_week_mon0(std::int64_t days) {
  // 1970-01-01 (epoch day 0) was a Thursday, i.e. 3 in Monday=0 indexing.
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

UtcSeconds parse_iso8601(const std::string& text) {
  // Minimum: YYYY-MM-DDTHH:MM:SSZ  -> 20 chars.
  if (text.size() < 20) bad("too short", text);
  int year = digits(text, 0, 4);
  if (text[4] != '-') bad("expected '-' after year", text);
  int month = digits(text, 5, 2);
  if (text[7] != '-') bad("expected '-' after month", text);
  int day = digits(text, 8, 2);
  if (text[10] != 'T') bad("expected 'T' date/time separator", text);
  int hour = digits(text, 11, 2);
  if (text[13] != ':') bad("expected ':' after hour", text);
  int minute = digits(text, 14, 2);
  if (text[16] != ':') bad("expected ':' after minute", text);
  int second = digits(text, 17, 2);
  if (hour > 23) bad("hour out of range", text);
  if (minute > 59) bad("minute out of range", text);
  if (second > 59) bad("second out of range", text);

  std::int64_t offset_sec = 0;
  char tz = text[19];
  if (tz == 'Z') {
    if (text.size() != 20) bad("trailing characters", text);
  } else if (tz == '+' || tz == '-') {
    if (text.size() != 25) bad("offset must be +HH:MM", text);
    int oh = digits(text, 20, 2);
    if (text[22] != ':') bad("expected ':' in offset", text);
    int om = digits(text, 23, 2);
    if (oh > 23 || om > 59) bad("offset out of range", text);
    offset_sec = (tz == '+' ? 1 : -1) * (oh * 3600 + om * 60);
  } else {
    bad("expected 'Z' or offset", text);
  }

  std::int64_t civil_days;
  try {
    civil_days = days_from_civil(year, month, day);
  } catch (const std::invalid_argument& e) {
    bad(e.what(), text);
  }
  std::int64_t local = civil_days * 86400 + hour * 3600 + minute * 60 + second;
  return local - offset_sec;
}

std::string format_iso8601_utc(UtcSeconds t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace zk

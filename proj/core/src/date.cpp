#include "newscnn/date.hpp"

#include <charconv>
#include <cstdio>

#include "newscnn/error.hpp"

namespace newscnn {

namespace {

bool parse_uint(std::string_view text, unsigned& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                  std::chrono::day{day}};
  if (!ymd.ok()) throw Error("invalid calendar date");
  days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view text) {
  unsigned y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_uint(text.substr(0, 4), y) ||
      !parse_uint(text.substr(5, 2), m) || !parse_uint(text.substr(8, 2), d)) {
    throw Error("expected date YYYY-MM-DD, got '" + std::string(text) + "'");
  }
  std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)}, std::chrono::month{m},
                                  std::chrono::day{d}};
  if (!ymd.ok()) throw Error("invalid calendar date '" + std::string(text) + "'");
  return Date{std::chrono::sys_days{ymd}};
}

bool Date::is_weekend() const {
  std::chrono::weekday wd{days_};
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

std::string Date::to_string() const {
  auto v = ymd();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
  return buf;
}

int parse_time_of_day(std::string_view text) {
  unsigned h = 0, m = 0;
  if (text.size() != 5 || text[2] != ':' || !parse_uint(text.substr(0, 2), h) ||
      !parse_uint(text.substr(3, 2), m) || h > 23 || m > 59) {
    throw Error("expected time HH:MM, got '" + std::string(text) + "'");
  }
  return static_cast<int>(h * 60 + m);
}

std::string format_time_of_day(int minutes) {
  if (minutes < 0 || minutes >= 24 * 60) throw Error("minute of day out of range: " + std::to_string(minutes));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

}  // namespace newscnn

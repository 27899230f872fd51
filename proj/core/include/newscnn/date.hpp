#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace newscnn {

// Calendar date with day resolution. Ordering is chronological.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days d) : days_(d) {}
  Date(int year, unsigned month, unsigned day);

  // Parses `YYYY-MM-DD`; throws newscnn::Error on malformed or invalid dates.
  static Date parse(std::string_view text);

  std::chrono::sys_days sys_days() const { return days_; }
  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
  long serial() const { return days_.time_since_epoch().count(); }

  Date plus_days(int n) const { return Date{days_ + std::chrono::days{n}}; }
  bool is_weekend() const;

  std::string to_string() const;

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

// Minutes since midnight. Parses `HH:MM` (24h).
int parse_time_of_day(std::string_view text);
std::string format_time_of_day(int minutes);

}  // namespace newscnn

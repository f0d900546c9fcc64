#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

#include "epifilter/errors.hpp"

namespace epifilter {

/// Calendar date with day-resolution arithmetic. Valid range is the
/// proleptic Gregorian calendar; all conversions are exact integers.
struct Date {
  int y = 0;
  int m = 0;  // 1..12
  int d = 0;  // 1..31

  bool valid() const {
    static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m < 1 || m > 12 || d < 1) return false;
    int dm = mdays[m - 1];
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) dm = 29;
    return d <= dm;
  }

  // Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
  long long to_days() const {
    long long yy = y - (m <= 2);
    long long era = (yy >= 0 ? yy : yy - 399) / 400;
    unsigned yoe = static_cast<unsigned>(yy - era * 400);
    unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
  }

  static Date from_days(long long z) {
    z += 719468;
    long long era = (z >= 0 ? z : z - 146096) / 146097;
    unsigned doe = static_cast<unsigned>(z - era * 146097);
    unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    long long yy = static_cast<long long>(yoe) + era * 400;
    unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    unsigned mp = (5 * doy + 2) / 153;
    unsigned dd = doy - (153 * mp + 2) / 5 + 1;
    unsigned mm = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(yy + (mm <= 2)), static_cast<int>(mm), static_cast<int>(dd)};
  }

  Date operator+(int days) const { return from_days(to_days() + days); }
  long long operator-(const Date& o) const { return to_days() - o.to_days(); }
  bool operator==(const Date& o) const { return y == o.y && m == o.m && d == o.d; }
  bool operator!=(const Date& o) const { return !(*this == o); }
  bool operator<(const Date& o) const { return to_days() < o.to_days(); }
  bool operator<=(const Date& o) const { return to_days() <= o.to_days(); }
  bool operator>(const Date& o) const { return o < *this; }
  bool operator>=(const Date& o) const { return o <= *this; }

  std::string iso() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
  }
};

namespace detail {
inline bool all_digits(const std::string& s, std::size_t from, std::size_t to) {
  if (from >= to || to > s.size()) return false;
  for (std::size_t k = from; k < to; ++k)
    if (s[k] < '0' || s[k] > '9') return false;
  return true;
}
}  // namespace detail

/// Parses "YYYY-MM-DD" strictly (fixed widths, no trailing characters).
inline Date parse_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !detail::all_digits(s, 0, 4) ||
      !detail::all_digits(s, 5, 7) || !detail::all_digits(s, 8, 10))
    throw FormatError("bad ISO date '" + s + "' (expected YYYY-MM-DD)");
  Date date{std::atoi(s.substr(0, 4).c_str()), std::atoi(s.substr(5, 2).c_str()),
            std::atoi(s.substr(8, 2).c_str())};
  if (!date.valid()) throw FormatError("invalid calendar date '" + s + "'");
  return date;
}

/// Parses the M/D/YY form used by the JHU CSSE time-series headers
/// (e.g. "1/22/20" -> 2020-01-22). Two-digit years map to 2000-2099.
inline Date parse_mdy_date(const std::string& s) {
  std::size_t a = s.find('/');
  std::size_t b = a == std::string::npos ? std::string::npos : s.find('/', a + 1);
  auto bad = [&] { throw FormatError("bad date column '" + s + "' (expected M/D/YY)"); };
  if (b == std::string::npos) bad();
  std::string ms = s.substr(0, a), ds = s.substr(a + 1, b - a - 1), ys = s.substr(b + 1);
  auto two_digits = [](const std::string& p) {
    return (p.size() == 1 || p.size() == 2) && detail::all_digits(p, 0, p.size());
  };
  if (!two_digits(ms) || !two_digits(ds) || !two_digits(ys)) bad();
  Date date{2000 + std::atoi(ys.c_str()), std::atoi(ms.c_str()), std::atoi(ds.c_str())};
  if (!date.valid()) throw FormatError("invalid calendar date '" + s + "'");
  return date;
}

}  // namespace epifilter

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "epifilter/date.hpp"
#include "epifilter/errors.hpp"
#include "epifilter/log.hpp"

namespace epifilter {

/// One province/country row of a JHU-format cumulative time series.
struct RawSeriesRow {
  std::string province;
  std::string country;
  double lat = 0;
  double lon = 0;
  std::vector<double> counts;  // cumulative, one per date column
};

struct RawSeriesTable {
  std::vector<Date> dates;
  std::vector<RawSeriesRow> rows;
};

/// Country-level cumulative series for a single metric.
struct RegionSeries {
  std::string region;
  double population = 0;
  std::vector<Date> dates;
  std::vector<double> counts;
};

/// Aligned daily observations for one region with the derived model
/// compartments: treated T = confirmed - recovered - deaths and removed
/// R = recovered + deaths.
struct ObservationSeries {
  std::string region;
  double population = 0;
  std::vector<Date> dates;
  std::vector<double> confirmed;
  std::vector<double> recovered;
  std::vector<double> deaths;
  std::vector<double> treated;
  std::vector<double> removed;

  std::size_t size() const { return dates.size(); }
};

struct Repair {
  std::string series;  // which column was touched
  Date date;
  double before = 0;
  double after = 0;
  std::string kind;  // dip | gap-fill | negative-treated
};

struct ValidationReport {
  std::vector<Repair> repairs;
  std::vector<std::string> warnings;
  bool clean() const { return repairs.empty() && warnings.empty(); }
};

namespace detail {

// RFC-4180 reader: quoted fields may contain commas, doubled quotes, and
// line breaks. Returns one vector of fields per record.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, any = false;
  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    any = true;
  };
  auto end_record = [&] {
    if (any || !fields.empty()) {
      end_field();
      records.push_back(std::move(fields));
      fields.clear();
      any = false;
    }
  };
  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get(c);
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_record();
    } else {
      field.push_back(c);
    }
  }
  if (!field.empty() && field.back() == '\r') field.pop_back();
  if (!field.empty() || any) end_record();
  return records;
}

inline double parse_count(const std::string& cell, std::size_t row, std::size_t col,
                          const std::string& what) {
  const char* s = cell.c_str();
  char* end = nullptr;
  long long v = std::strtoll(s, &end, 10);
  if (cell.empty() || end != s + cell.size() || v < 0)
    throw FormatError(what + ": row " + std::to_string(row) + ", column " + std::to_string(col) +
                      ": malformed count '" + cell + "'");
  return static_cast<double>(v);
}

inline double parse_coord(const std::string& cell) {
  if (cell.empty()) return 0;
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  return end == cell.c_str() + cell.size() ? v : 0;
}

inline std::string format_number(double v) {
  char buf[64];
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15)
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
  else
    std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parse a JHU CSSE global time-series CSV. The header must read
/// Province/State,Country/Region,Lat,Long followed by M/D/YY date columns.
inline RawSeriesTable parse_jhu_csv(std::istream& in, const std::string& what = "<stream>") {
  auto records = detail::parse_csv(in);
  if (records.empty()) throw FormatError(what + ": empty file");
  const auto& header = records[0];
  if (header.size() < 5 || header[0] != "Province/State" || header[1] != "Country/Region" ||
      header[2] != "Lat" || header[3] != "Long")
    throw FormatError(what +
                      ": missing header (expected Province/State,Country/Region,Lat,Long,...)");

  RawSeriesTable table;
  for (std::size_t k = 4; k < header.size(); ++k) {
    Date d = parse_mdy_date(header[k]);
    if (!table.dates.empty() && !(table.dates.back() < d))
      throw FormatError(what + ": date columns not strictly increasing at '" + header[k] + "'");
    table.dates.push_back(d);
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size())
      throw FormatError(what + ": ragged row " + std::to_string(r + 1) + " (" +
                        std::to_string(rec.size()) + " fields, expected " +
                        std::to_string(header.size()) + ")");
    RawSeriesRow row;
    row.province = rec[0];
    row.country = rec[1];
    row.lat = detail::parse_coord(rec[2]);
    row.lon = detail::parse_coord(rec[3]);
    row.counts.reserve(table.dates.size());
    for (std::size_t k = 4; k < rec.size(); ++k)
      row.counts.push_back(detail::parse_count(rec[k], r + 1, k + 1, what));
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline RawSeriesTable parse_jhu_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path + "'");
  return parse_jhu_csv(in, path);
}

/// Sum all province rows of one country. Unknown regions raise a not-found
/// error listing what the table does contain.
inline RegionSeries series_for_region(const RawSeriesTable& table, const std::string& region,
                                      double population) {
  RegionSeries out;
  out.region = region;
  out.population = population;
  out.dates = table.dates;
  out.counts.assign(table.dates.size(), 0.0);
  bool found = false;
  for (const auto& row : table.rows) {
    if (row.country != region) continue;
    found = true;
    for (std::size_t k = 0; k < row.counts.size(); ++k) out.counts[k] += row.counts[k];
  }
  if (!found) {
    std::set<std::string> names;
    for (const auto& row : table.rows) names.insert(row.country);
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw NotFoundError("region '" + region + "' not in table; available: " + list);
  }
  return out;
}

struct DerivedCompartments {
  std::vector<double> treated;
  std::vector<double> removed;
  std::vector<std::size_t> clipped;  // indices where T went negative
};

/// T_t = confirmed - recovered - deaths (clipped at 0), R_t = recovered + deaths.
inline DerivedCompartments derive_compartments(const std::vector<double>& confirmed,
                                               const std::vector<double>& recovered,
                                               const std::vector<double>& deaths) {
  if (confirmed.size() != recovered.size() || confirmed.size() != deaths.size())
    throw InvalidInputError("derive_compartments: series lengths differ");
  DerivedCompartments out;
  out.treated.resize(confirmed.size());
  out.removed.resize(confirmed.size());
  for (std::size_t k = 0; k < confirmed.size(); ++k) {
    double t = confirmed[k] - recovered[k] - deaths[k];
    if (t < 0) {
      out.clipped.push_back(k);
      t = 0;
    }
    out.treated[k] = t;
    out.removed[k] = recovered[k] + deaths[k];
  }
  return out;
}

/// Check and (when repair is true) clean a series in place: forward-fill
/// date gaps, clamp dips in cumulative counts to the running maximum, and
/// re-derive T/R. Every change lands in the report; nothing is silent.
inline ValidationReport validate_series(ObservationSeries& s, bool repair = true) {
  ValidationReport report;
  const std::size_t len = s.size();
  if (s.confirmed.size() != len || s.recovered.size() != len || s.deaths.size() != len)
    throw InvalidInputError("validate_series: column lengths differ");
  for (std::size_t k = 1; k < len; ++k)
    if (!(s.dates[k - 1] < s.dates[k]))
      throw InvalidInputError("validate_series: dates not strictly increasing at " +
                              s.dates[k].iso());

  ObservationSeries work = s;

  // Gaps: insert missing days, carrying the previous row forward.
  ObservationSeries filled;
  filled.region = work.region;
  filled.population = work.population;
  for (std::size_t k = 0; k < len; ++k) {
    if (k > 0) {
      long long gap = work.dates[k] - work.dates[k - 1] - 1;
      if (gap > 1)
        report.warnings.push_back("gap of " + std::to_string(gap) + " days before " +
                                  work.dates[k].iso());
      for (long long g = 1; g <= gap; ++g) {
        Date missing = work.dates[k - 1] + static_cast<int>(g);
        filled.dates.push_back(missing);
        filled.confirmed.push_back(work.confirmed[k - 1]);
        filled.recovered.push_back(work.recovered[k - 1]);
        filled.deaths.push_back(work.deaths[k - 1]);
        report.repairs.push_back(
            {"all", missing, 0, work.confirmed[k - 1], "gap-fill"});
      }
    }
    filled.dates.push_back(work.dates[k]);
    filled.confirmed.push_back(work.confirmed[k]);
    filled.recovered.push_back(work.recovered[k]);
    filled.deaths.push_back(work.deaths[k]);
  }
  work = std::move(filled);

  // Dips in cumulative series: monotone envelope.
  auto envelope = [&](std::vector<double>& v, const char* name) {
    for (std::size_t k = 1; k < v.size(); ++k) {
      if (v[k] < v[k - 1]) {
        report.repairs.push_back({name, work.dates[k], v[k], v[k - 1], "dip"});
        v[k] = v[k - 1];
      }
    }
  };
  envelope(work.confirmed, "confirmed");
  envelope(work.recovered, "recovered");
  envelope(work.deaths, "deaths");

  DerivedCompartments derived = derive_compartments(work.confirmed, work.recovered, work.deaths);
  for (std::size_t k : derived.clipped)
    report.repairs.push_back({"treated", work.dates[k],
                              work.confirmed[k] - work.recovered[k] - work.deaths[k], 0,
                              "negative-treated"});
  work.treated = std::move(derived.treated);
  work.removed = std::move(derived.removed);

  std::size_t zeros = 0;
  for (double v : work.recovered)
    if (v == 0) ++zeros;
  if (len > 0 && zeros * 10 > work.recovered.size() * 9)
    report.warnings.push_back("recovered series for " + work.region +
                              " is over 90% zeros; treated counts may be overstated");

  if (repair) s = std::move(work);
  for (const auto& r : report.repairs)
    log_debug("repair " + r.kind + " " + r.series + " at " + r.date.iso());
  return report;
}

/// Combine the three JHU tables into one validated ObservationSeries.
/// Tables are aligned on their common date range.
inline ObservationSeries assemble_observations(const RawSeriesTable& confirmed,
                                               const RawSeriesTable& deaths,
                                               const RawSeriesTable& recovered,
                                               const std::string& region, double population,
                                               ValidationReport* report = nullptr) {
  RegionSeries c = series_for_region(confirmed, region, population);
  RegionSeries d = series_for_region(deaths, region, population);
  RegionSeries r = series_for_region(recovered, region, population);

  Date lo = std::max({c.dates.front(), d.dates.front(), r.dates.front()});
  Date hi = std::min({c.dates.back(), d.dates.back(), r.dates.back()});
  if (hi < lo) throw InvalidInputError("assemble_observations: tables share no date range");

  auto window = [&](const RegionSeries& src, std::vector<Date>* dates) {
    std::vector<double> out;
    for (std::size_t k = 0; k < src.dates.size(); ++k) {
      if (src.dates[k] < lo || hi < src.dates[k]) continue;
      out.push_back(src.counts[k]);
      if (dates) dates->push_back(src.dates[k]);
    }
    return out;
  };

  ObservationSeries series;
  series.region = region;
  series.population = population;
  series.confirmed = window(c, &series.dates);
  series.deaths = window(d, nullptr);
  series.recovered = window(r, nullptr);
  if (series.deaths.size() != series.dates.size() || series.recovered.size() != series.dates.size())
    throw InvalidInputError("assemble_observations: tables disagree on dates inside " + lo.iso() +
                            ".." + hi.iso());

  ValidationReport rep = validate_series(series, true);
  if (report) *report = std::move(rep);
  return series;
}

inline const char* kSeriesHeader = "date,confirmed,recovered,deaths,treated,removed";

inline void write_series_csv(const ObservationSeries& s, std::ostream& out) {
  out << kSeriesHeader << "\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    out << s.dates[k].iso() << ',' << detail::format_number(s.confirmed[k]) << ','
        << detail::format_number(s.recovered[k]) << ',' << detail::format_number(s.deaths[k])
        << ',' << detail::format_number(s.treated[k]) << ','
        << detail::format_number(s.removed[k]) << "\n";
  }
}

inline ObservationSeries read_series_csv(std::istream& in, const std::string& region,
                                         double population, const std::string& what = "<stream>") {
  auto records = detail::parse_csv(in);
  if (records.empty()) throw FormatError(what + ": empty series file");
  std::string header;
  for (std::size_t k = 0; k < records[0].size(); ++k)
    header += (k ? "," : "") + records[0][k];
  if (header != kSeriesHeader)
    throw FormatError(what + ": bad header '" + header + "' (expected " + kSeriesHeader + ")");

  ObservationSeries s;
  s.region = region;
  s.population = population;
  for (std::size_t rix = 1; rix < records.size(); ++rix) {
    const auto& rec = records[rix];
    if (rec.size() != 6)
      throw FormatError(what + ": ragged row " + std::to_string(rix + 1));
    s.dates.push_back(parse_iso_date(rec[0]));
    auto value = [&](std::size_t col) {
      char* end = nullptr;
      double v = std::strtod(rec[col].c_str(), &end);
      if (rec[col].empty() || end != rec[col].c_str() + rec[col].size())
        throw FormatError(what + ": row " + std::to_string(rix + 1) + ", column " +
                          std::to_string(col + 1) + ": malformed value '" + rec[col] + "'");
      return v;
    };
    s.confirmed.push_back(value(1));
    s.recovered.push_back(value(2));
    s.deaths.push_back(value(3));
    s.treated.push_back(value(4));
    s.removed.push_back(value(5));
  }
  return s;
}

inline ObservationSeries read_series_csv_file(const std::string& path, const std::string& region,
                                              double population) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path + "'");
  return read_series_csv(in, region, population, path);
}

}  // namespace epifilter

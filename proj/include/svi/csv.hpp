#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>

#include "svi/vi_core.hpp"

namespace svi {

// One method's aggregated trace: a row per recorded iterate with the
// across-replication mean distance, the matching theoretical-bound value,
// the cumulative oracle-draw counter, and cumulative wall-clock seconds.
// Per-replication distances are optional extra columns.
struct TraceRecord {
  std::string label;
  std::vector<long long> k;
  std::vector<double> mean_dist_sq;
  std::vector<double> bound;
  std::vector<long long> cum_samples;
  // Wall-clock is carried for summaries but never exported: the CSV must be
  // byte-identical across runs with the same seed, and timings are not.
  std::vector<double> wall_time;
  std::vector<std::vector<double>> replication_dist_sq;  // [replication][row]

  std::size_t rows() const { return k.size(); }

  void validate() const {
    const std::size_t r = rows();
    if (r == 0) throw std::invalid_argument("TraceRecord: empty trace for '" + label + "'");
    if (mean_dist_sq.size() != r || bound.size() != r || cum_samples.size() != r ||
        (!wall_time.empty() && wall_time.size() != r))
      throw std::invalid_argument("TraceRecord: ragged columns for '" + label + "'");
    for (const auto& rep : replication_dist_sq)
      if (rep.size() != r)
        throw std::invalid_argument("TraceRecord: ragged replication column for '" + label + "'");
    for (std::size_t i = 1; i < r; ++i) {
      if (k[i] <= k[i - 1])
        throw std::invalid_argument("TraceRecord: rows not ordered by k for '" + label + "'");
      if (cum_samples[i] < cum_samples[i - 1])
        throw std::invalid_argument("TraceRecord: sample counter decreases for '" + label + "'");
    }
  }
};

namespace detail {

// Shortest text that parses back to the same double would also do; 17
// significant digits is the simple guaranteed-round-trip choice.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace detail

// Writes all records into one file with a leading method column, rows
// ordered by (record order, k). LF line endings, full double precision.
inline void export_csv(const std::vector<TraceRecord>& records, const std::string& path) {
  if (records.empty()) throw std::invalid_argument("export_csv: no records");
  const std::size_t reps = records.front().replication_dist_sq.size();
  for (const auto& rec : records) {
    rec.validate();
    if (rec.replication_dist_sq.size() != reps)
      throw std::invalid_argument(
          "export_csv: records disagree on replication column count");
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);
  out << "method,k,mean_dist_sq,bound,cum_samples";
  for (std::size_t r = 0; r < reps; ++r) out << ",rep_" << r;
  out << '\n';
  for (const auto& rec : records) {
    for (std::size_t i = 0; i < rec.rows(); ++i) {
      out << rec.label << ',' << rec.k[i] << ',' << detail::format_double(rec.mean_dist_sq[i])
          << ',' << detail::format_double(rec.bound[i]) << ',' << rec.cum_samples[i];
      for (std::size_t r = 0; r < reps; ++r)
        out << ',' << detail::format_double(rec.replication_dist_sq[r][i]);
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("export_csv: write failed for " + path);
}

// Inverse of export_csv; records come back in first-appearance order.
inline std::vector<TraceRecord> parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("parse_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("parse_csv: empty file " + path);
  const auto header = detail::split_csv_line(line);
  constexpr std::size_t kFixed = 5;
  if (header.size() < kFixed || header[0] != "method" || header[1] != "k" ||
      header[2] != "mean_dist_sq" || header[3] != "bound" || header[4] != "cum_samples")
    throw std::runtime_error("parse_csv: unexpected header in " + path);
  const std::size_t reps = header.size() - kFixed;

  std::vector<TraceRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("parse_csv: wrong field count at line " +
                               std::to_string(lineno) + " of " + path);
    if (records.empty() || records.back().label != fields[0]) {
      records.emplace_back();
      records.back().label = fields[0];
      records.back().replication_dist_sq.resize(reps);
    }
    TraceRecord& rec = records.back();
    rec.k.push_back(std::stoll(fields[1]));
    rec.mean_dist_sq.push_back(std::stod(fields[2]));
    rec.bound.push_back(std::stod(fields[3]));
    rec.cum_samples.push_back(std::stoll(fields[4]));
    for (std::size_t r = 0; r < reps; ++r)
      rec.replication_dist_sq[r].push_back(std::stod(fields[kFixed + r]));
  }
  if (records.empty()) throw std::runtime_error("parse_csv: no data rows in " + path);
  for (const auto& rec : records) rec.validate();
  return records;
}

}  // namespace svi

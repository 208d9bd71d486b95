#pragma once

// Locale-independent CSV emit/parse for the four table shapes produced by the
// CLI. Doubles go through to_chars (shortest round-trip form, '.' decimal)
// so output bytes do not depend on the host locale or print flags.

#include <charconv>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "topodyn/efm.hpp"
#include "topodyn/witness.hpp"

namespace topodyn {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) throw IoError("double formatting failed");
  return std::string(buf, res.ptr);
}

inline double parse_double_field(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw IoError("bad numeric field '" + s + "'");
  return v;
}

inline long long parse_int_field(const std::string& s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw IoError("bad integer field '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// Per-step witness series, one row per micro step starting at t = 1.
// r_min is "nan" on rows where no loop exists (defined = 0).
inline void write_witness_csv(std::ostream& os, const std::vector<RminRow>& rows) {
  os << "t,d,r_min,landmark_count,defined\n";
  for (const auto& row : rows) {
    os << row.t << ',' << format_double(row.d) << ',';
    if (row.r_min)
      os << format_double(*row.r_min);
    else
      os << "nan";
    os << ',' << row.landmark_count << ',' << (row.r_min ? 1 : 0) << '\n';
  }
}

inline void write_coarse_csv(std::ostream& os, const CoarseSeries& cs) {
  os << "t,R,D,defined_count\n";
  for (std::size_t i = 0; i < cs.times.size(); ++i) {
    os << cs.times[i] << ',' << format_double(cs.R[i]) << ','
       << format_double(cs.D[i]) << ',' << cs.defined[i] << '\n';
  }
}

inline CoarseSeries read_coarse_csv(std::istream& is) {
  CoarseSeries cs;
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty coarse series file");
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 4) throw IoError("coarse series row needs 4 fields");
    cs.times.push_back(static_cast<int>(parse_int_field(f[0])));
    cs.R.push_back(parse_double_field(f[1]));
    cs.D.push_back(parse_double_field(f[2]));
    cs.defined.push_back(static_cast<int>(parse_int_field(f[3])));
    first = false;
  }
  (void)first;
  return cs;
}

inline void write_calibration_csv(std::ostream& os, const LiftCalibration& cal) {
  os << "spacing,r_min\n";
  for (std::size_t i = 0; i < cal.spacing.size(); ++i)
    os << format_double(cal.spacing[i]) << ',' << format_double(cal.rbar[i]) << '\n';
}

inline LiftCalibration read_calibration_csv(std::istream& is) {
  LiftCalibration cal;
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty calibration file");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 2) throw IoError("calibration row needs 2 fields");
    cal.spacing.push_back(parse_double_field(f[0]));
    cal.rbar.push_back(parse_double_field(f[1]));
  }
  if (cal.spacing.size() < 2) throw IoError("calibration table needs at least 2 rows");
  for (std::size_t i = 1; i < cal.spacing.size(); ++i) {
    if (!(cal.spacing[i] > cal.spacing[i - 1]) || !(cal.rbar[i] > cal.rbar[i - 1]))
      throw IoError("calibration table must be strictly increasing");
  }
  return cal;
}

struct DiagramRow {
  double epsilon = 0.0;
  double R_star = 0.0;
  double slope = 0.0;
  bool stable = false;
  double residual = 0.0;
};

inline void write_diagram_csv(std::ostream& os, const std::vector<DiagramRow>& rows) {
  os << "epsilon,R_star,slope,stability,residual\n";
  for (const auto& r : rows) {
    os << format_double(r.epsilon) << ',' << format_double(r.R_star) << ','
       << format_double(r.slope) << ',' << (r.stable ? "stable" : "unstable") << ','
       << format_double(r.residual) << '\n';
  }
}

inline std::vector<DiagramRow> read_diagram_csv(std::istream& is) {
  std::vector<DiagramRow> rows;
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty diagram file");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 5) throw IoError("diagram row needs 5 fields");
    DiagramRow r;
    r.epsilon = parse_double_field(f[0]);
    r.R_star = parse_double_field(f[1]);
    r.slope = parse_double_field(f[2]);
    if (f[3] == "stable")
      r.stable = true;
    else if (f[3] == "unstable")
      r.stable = false;
    else
      throw IoError("stability field must be 'stable' or 'unstable'");
    r.residual = parse_double_field(f[4]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace topodyn

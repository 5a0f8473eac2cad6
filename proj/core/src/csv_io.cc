#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "io_util.h"
#include "svo/errors.h"
#include "svo/io.h"

namespace svo {
namespace detail {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitFields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(Trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(Trim(cur));
  return out;
}

bool ParseDouble(const std::string& text, double& out) {
  if (text.empty()) return false;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE) return false;
  out = v;
  return true;
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ifstream OpenInput(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return in;
}

std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void CloseOutput(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace detail

namespace {

using detail::FormatDouble;
using detail::ParseDouble;
using detail::SplitFields;
using detail::Trim;

constexpr double kDtTolerance = 1e-6;

std::string LineMessage(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

// Reads a numeric CSV with an exact header. Blank lines are ignored.
struct NumericRows {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;
};

NumericRows ReadNumericCsv(std::istream& in,
                           const std::vector<std::string>& header) {
  NumericRows out;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (Trim(line).empty()) continue;
    const auto fields = SplitFields(line, ',');
    if (!have_header) {
      if (fields != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw ParseError(LineMessage(lineno, "expected header `" + want + "`"),
                         lineno);
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError(LineMessage(lineno, "expected " +
                                               std::to_string(header.size()) +
                                               " fields"),
                       lineno);
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!ParseDouble(fields[i], row[i]) || !std::isfinite(row[i])) {
        throw ParseError(
            LineMessage(lineno, "non-finite or malformed value `" + fields[i] +
                                    "` in column " + header[i]),
            lineno);
      }
    }
    out.rows.push_back(std::move(row));
    out.lines.push_back(lineno);
  }
  if (!have_header) throw ParseError("empty file", lineno);
  return out;
}

// Checks that t advances by a uniform step within [first, last) and returns
// it. A single row yields `fallback`.
double UniformDt(const NumericRows& r, std::size_t first, std::size_t last,
                 double fallback) {
  if (last - first < 2) return fallback;
  const double dt = r.rows[first + 1][0] - r.rows[first][0];
  if (!(dt > 0.0)) {
    throw ParseError(LineMessage(r.lines[first + 1], "time must increase"),
                     r.lines[first + 1]);
  }
  for (std::size_t i = first + 1; i < last; ++i) {
    const double step = r.rows[i][0] - r.rows[i - 1][0];
    if (std::abs(step - dt) > kDtTolerance) {
      throw ParseError(
          LineMessage(r.lines[i], "non-uniform time step " +
                                      FormatDouble(step) + " (expected " +
                                      FormatDouble(dt) + ")"),
          r.lines[i]);
    }
  }
  return dt;
}

const std::vector<std::string> kPvHeader = {"t", "speed_mps"};
const std::vector<std::string> kDemoHeader = {
    "t", "gap_m", "speed_mps", "accel_mps2", "leader_speed_mps",
    "control_mps2"};

}  // namespace

PvProfile ParsePvProfile(std::istream& in) {
  const NumericRows r = ReadNumericCsv(in, kPvHeader);
  if (r.rows.empty()) throw ParseError("no data rows", 1);
  PvProfile out;
  out.dt = UniformDt(r, 0, r.rows.size(), 0.0);
  if (r.rows.size() < 2) {
    throw ParseError(LineMessage(r.lines[0], "need at least two rows for dt"),
                     r.lines[0]);
  }
  out.speeds.reserve(r.rows.size());
  for (const auto& row : r.rows) {
    double v = row[1];
    if (v < 0.0) {
      v = 0.0;
      ++out.clamped_count;
    }
    out.speeds.push_back(v);
  }
  return out;
}

PvProfile LoadPvProfileCsv(const std::filesystem::path& path) {
  std::ifstream in = detail::OpenInput(path);
  try {
    return ParsePvProfile(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void WritePvProfileCsv(const std::filesystem::path& path,
                       const std::vector<double>& speeds, double dt) {
  std::ofstream out = detail::OpenOutput(path);
  out << "t,speed_mps\n";
  for (std::size_t k = 0; k < speeds.size(); ++k) {
    out << FormatDouble(static_cast<double>(k) * dt) << ','
        << FormatDouble(speeds[k]) << '\n';
  }
  detail::CloseOutput(out, path);
}

std::vector<Demonstration> ParseDemonstrations(std::istream& in) {
  const NumericRows r = ReadNumericCsv(in, kDemoHeader);
  if (r.rows.empty()) throw ParseError("no data rows", 1);
  std::vector<Demonstration> demos;
  std::size_t first = 0;
  for (std::size_t i = 1; i <= r.rows.size(); ++i) {
    if (i < r.rows.size() && r.rows[i][0] > r.rows[i - 1][0]) continue;
    Demonstration d;
    d.dt = UniformDt(r, first, i, 0.1);
    for (std::size_t j = first; j < i; ++j) {
      const auto& row = r.rows[j];
      d.samples.push_back({{row[1], row[2], row[3]}, row[4], row[5]});
    }
    try {
      d.Validate();
    } catch (const InvalidParameter& e) {
      throw ParseError(LineMessage(r.lines[first], e.what()), r.lines[first]);
    }
    demos.push_back(std::move(d));
    first = i;
  }
  return demos;
}

std::vector<Demonstration> LoadDemonstrationsCsv(
    const std::filesystem::path& path) {
  std::ifstream in = detail::OpenInput(path);
  try {
    return ParseDemonstrations(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void WriteDemonstrationsCsv(const std::filesystem::path& path,
                            const std::vector<Demonstration>& demos) {
  std::ofstream out = detail::OpenOutput(path);
  out << "t,gap_m,speed_mps,accel_mps2,leader_speed_mps,control_mps2\n";
  for (const Demonstration& d : demos) {
    for (std::size_t k = 0; k < d.samples.size(); ++k) {
      const DemoSample& s = d.samples[k];
      out << FormatDouble(static_cast<double>(k) * d.dt) << ','
          << FormatDouble(s.state.gap) << ',' << FormatDouble(s.state.speed)
          << ',' << FormatDouble(s.state.accel) << ','
          << FormatDouble(s.leader_speed) << ',' << FormatDouble(s.control)
          << '\n';
    }
  }
  detail::CloseOutput(out, path);
}

}  // namespace svo

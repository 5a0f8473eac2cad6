#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "io_util.h"
#include "svo/errors.h"
#include "svo/io.h"

namespace svo {
namespace {

constexpr double kFramePeriod = 0.1;  // s, NGSIM sampling rate is 10 Hz

// Published column positions (I-80 text files and the CSV export agree on
// the leading columns).
struct Columns {
  std::size_t vehicle = 0;
  std::size_t frame = 1;
  std::size_t time = 3;
  std::size_t local_y = 5;
  std::size_t speed = 11;

  std::size_t Needed() const {
    return std::max({vehicle, frame, time, local_y, speed}) + 1;
  }
};

std::vector<std::string> Tokenize(const std::string& line) {
  if (line.find(',') != std::string::npos) {
    return detail::SplitFields(line, ',');
  }
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool LooksLikeHeader(const std::vector<std::string>& fields) {
  double dummy;
  return !fields.empty() && !detail::ParseDouble(fields[0], dummy);
}

Columns ColumnsFromHeader(const std::vector<std::string>& fields,
                          std::size_t lineno) {
  Columns c;
  bool found[5] = {false, false, false, false, false};
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string name = Lower(fields[i]);
    if (name == "vehicle_id") c.vehicle = i, found[0] = true;
    if (name == "frame_id") c.frame = i, found[1] = true;
    if (name == "global_time") c.time = i, found[2] = true;
    if (name == "local_y") c.local_y = i, found[3] = true;
    if (name == "v_vel") c.speed = i, found[4] = true;
  }
  for (bool f : found) {
    if (!f) {
      throw ParseError(
          "NGSIM header lacks one of Vehicle_ID, Frame_ID, Global_Time, "
          "Local_Y, v_Vel",
          lineno);
    }
  }
  return c;
}

}  // namespace

std::vector<double> MovingAverage(const std::vector<double>& x, int window) {
  if (window <= 1 || x.empty()) return x;
  const int half = window / 2;
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + (window - 1 - half));
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += x[j];
    out[i] = sum / (hi - lo + 1);
  }
  return out;
}

NgsimExtraction ExtractNgsimVehicle(std::istream& in, long vehicle_id,
                                    const NgsimOptions& options) {
  if (!(options.dt > 0.0)) throw InvalidParameter("NGSIM dt must be positive");
  NgsimExtraction out;
  out.vehicle_id = vehicle_id;
  out.dt = options.dt;

  Columns cols;
  std::set<long> ids;
  std::string line;
  std::size_t lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::Trim(line).empty()) continue;
    const auto fields = Tokenize(line);
    if (first_content) {
      first_content = false;
      if (LooksLikeHeader(fields)) {
        cols = ColumnsFromHeader(fields, lineno);
        continue;
      }
    }
    if (fields.size() < cols.Needed()) {
      ++out.skipped_rows;
      continue;
    }
    double vid, frame, time, y, vel;
    if (!detail::ParseDouble(fields[cols.vehicle], vid) ||
        !detail::ParseDouble(fields[cols.frame], frame) ||
        !detail::ParseDouble(fields[cols.time], time) ||
        !detail::ParseDouble(fields[cols.local_y], y) ||
        !detail::ParseDouble(fields[cols.speed], vel) || !std::isfinite(vid) ||
        !std::isfinite(frame) || !std::isfinite(time) || !std::isfinite(y) ||
        !std::isfinite(vel) || vid != std::floor(vid) ||
        frame != std::floor(frame)) {
      ++out.skipped_rows;
      continue;
    }
    const long id = static_cast<long>(vid);
    ids.insert(id);
    if (id != vehicle_id) continue;
    out.records.push_back({id, static_cast<long>(frame), time,
                           y * kFeetToMeters, vel * kFeetToMeters});
  }

  if (out.records.empty()) {
    std::string list;
    std::size_t shown = 0;
    for (long id : ids) {
      if (shown++ == 50) {
        list += ", ...";
        break;
      }
      list += (list.empty() ? "" : ", ") + std::to_string(id);
    }
    throw ParseError("vehicle " + std::to_string(vehicle_id) +
                         " not found; available ids: " +
                         (list.empty() ? "(none)" : list),
                     0);
  }

  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const NgsimRecord& a, const NgsimRecord& b) {
                     return a.frame_id < b.frame_id;
                   });
  std::vector<NgsimRecord> unique;
  for (const NgsimRecord& r : out.records) {
    if (!unique.empty() && unique.back().frame_id == r.frame_id) {
      ++out.skipped_rows;
      continue;
    }
    unique.push_back(r);
  }
  out.records = std::move(unique);

  // One speed per frame, missing frames linearly interpolated.
  std::vector<double> per_frame;
  per_frame.push_back(out.records.front().speed_mps);
  for (std::size_t i = 1; i < out.records.size(); ++i) {
    const NgsimRecord& a = out.records[i - 1];
    const NgsimRecord& b = out.records[i];
    const long span = b.frame_id - a.frame_id;
    for (long j = 1; j < span; ++j) {
      const double s = static_cast<double>(j) / static_cast<double>(span);
      per_frame.push_back(a.speed_mps + s * (b.speed_mps - a.speed_mps));
      ++out.interpolated_frames;
    }
    per_frame.push_back(b.speed_mps);
  }

  // Resample onto the output grid.
  const double duration =
      static_cast<double>(per_frame.size() - 1) * kFramePeriod;
  if (std::abs(options.dt - kFramePeriod) < 1e-12) {
    out.speeds = per_frame;
  } else {
    const auto n =
        static_cast<std::size_t>(std::floor(duration / options.dt + 1e-9)) + 1;
    out.speeds.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double pos = static_cast<double>(k) * options.dt / kFramePeriod;
      const auto i0 = std::min(static_cast<std::size_t>(std::floor(pos)),
                               per_frame.size() - 1);
      const std::size_t i1 = std::min(i0 + 1, per_frame.size() - 1);
      const double s = pos - static_cast<double>(i0);
      out.speeds[k] = per_frame[i0] + s * (per_frame[i1] - per_frame[i0]);
    }
  }
  if (options.smooth) {
    const int window = std::max(
        1, static_cast<int>(std::lround(options.smooth_window_s / options.dt)));
    out.speeds = MovingAverage(out.speeds, window);
  }
  for (double& v : out.speeds) v = std::max(0.0, v);
  return out;
}

NgsimExtraction ExtractNgsimVehicle(const std::filesystem::path& path,
                                    long vehicle_id,
                                    const NgsimOptions& options) {
  std::ifstream in = detail::OpenInput(path);
  try {
    return ExtractNgsimVehicle(in, vehicle_id, options);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

}  // namespace svo

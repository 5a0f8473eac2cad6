#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svo/irl.h"
#include "svo/simulation.h"

namespace svo {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr double kFeetToMeters = 0.3048;

// ---- PV speed profiles -----------------------------------------------------

struct PvProfile {
  double dt = 0.0;
  std::vector<double> speeds;     // m/s
  std::size_t clamped_count = 0;  // negative speeds raised to 0
};

// CSV with header `t,speed_mps`. Throws ParseError (with the 1-based line) on
// a missing header, non-finite value, non-uniform dt or empty body.
PvProfile ParsePvProfile(std::istream& in);
PvProfile LoadPvProfileCsv(const std::filesystem::path& path);
void WritePvProfileCsv(const std::filesystem::path& path,
                       const std::vector<double>& speeds, double dt);

// ---- Demonstrations --------------------------------------------------------

// Header `t,gap_m,speed_mps,accel_mps2,leader_speed_mps,control_mps2`. A file
// may hold several demonstrations; a new one starts whenever t drops back.
std::vector<Demonstration> ParseDemonstrations(std::istream& in);
std::vector<Demonstration> LoadDemonstrationsCsv(
    const std::filesystem::path& path);
void WriteDemonstrationsCsv(const std::filesystem::path& path,
                            const std::vector<Demonstration>& demos);

// ---- NGSIM -----------------------------------------------------------------

struct NgsimRecord {
  long vehicle_id = 0;
  long frame_id = 0;
  double timestamp_ms = 0.0;
  double local_y_m = 0.0;
  double speed_mps = 0.0;
};

struct NgsimOptions {
  double dt = 0.1;  // output sample period, s
  bool smooth = false;
  double smooth_window_s = 0.5;
};

struct NgsimExtraction {
  long vehicle_id = 0;
  double dt = 0.1;
  std::vector<double> speeds;  // m/s
  std::vector<NgsimRecord> records;
  std::size_t skipped_rows = 0;
  std::size_t interpolated_frames = 0;
};

// Rows in the published I-80 layout, comma or whitespace separated. With a
// header, columns are located by name (Vehicle_ID, Frame_ID, Global_Time,
// Local_Y, v_Vel); without one the published column positions are used.
// Rows that fail to parse are skipped and counted. Throws ParseError when the
// vehicle is absent, listing the ids that are present.
NgsimExtraction ExtractNgsimVehicle(std::istream& in, long vehicle_id,
                                    const NgsimOptions& options = {});
NgsimExtraction ExtractNgsimVehicle(const std::filesystem::path& path,
                                    long vehicle_id,
                                    const NgsimOptions& options = {});

// Centered moving average over `window` samples (shrinks at the ends).
std::vector<double> MovingAverage(const std::vector<double>& x, int window);

// ---- Results ---------------------------------------------------------------

// Files written into `outdir`: trace.csv (step,t,vehicle,gap_m,speed_mps,
// accel_mps2,control_mps2; one row per step per vehicle), plans.csv (one row
// per step of AV planner diagnostics) and metrics.json. Throws
// InvalidParameter on an empty trace and IoError with the path on failure.
void ExportResults(const EpisodeTrace& trace, const TrafficMetrics& metrics,
                   const SimulationConfig& cfg, const Scenario& scn,
                   const std::filesystem::path& outdir);

// Reads trace.csv, plans.csv and the label/phi/dt of metrics.json back.
EpisodeTrace ReadResults(const std::filesystem::path& outdir);

std::string MetricsJson(const EpisodeTrace& trace,
                        const TrafficMetrics& metrics,
                        const SimulationConfig& cfg, const Scenario& scn);

// ---- Configuration ---------------------------------------------------------

// One `key = value` per line, `#` starts a comment. Duplicate keys are an
// error. Keys keep their order of first appearance.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;  // 0 for values that did not come from a file
};
using KeyValues = std::vector<KeyValue>;
KeyValues ParseKeyValues(std::istream& in);
KeyValues LoadKeyValues(const std::filesystem::path& path);

struct ExperimentConfig {
  // Scenario source; at most one of pv_csv / ngsim_path may be set, and
  // neither when `scenario` names something other than synthetic-default.
  std::string scenario = "synthetic-default";
  std::string pv_csv;
  std::string ngsim_path;
  long ngsim_vehicle = -1;
  bool ngsim_smooth = false;
  double speed_limit = 25.0;

  std::vector<double> phi_levels{0.0};
  std::string weights_file;
  std::string output_dir = "out";
  unsigned long seed = 1;
  int threads = 0;

  SimulationConfig sim;
};

// Applies every recognised key; throws ParseError naming an unknown key or a
// malformed value.
void ApplyKeyValues(const KeyValues& kv, ExperimentConfig& cfg);

// The effective configuration as key-value text (parseable by
// ParseKeyValues / ApplyKeyValues).
std::string FormatConfig(const ExperimentConfig& cfg);

// Weight profile files use the same key-value format (w_accel,
// w_desired_speed, w_relative_speed, w_relative_distance, tau_h, d_s).
DriverWeights LoadWeights(const std::filesystem::path& path);
void WriteWeights(const std::filesystem::path& path, const DriverWeights& w);

// Accepts plain numbers and the forms pi, pi/N, K*pi/N, K*pi.
double ParseAngle(const std::string& text);
std::vector<double> ParseAngleList(const std::string& text);

// Builds the scenario named by the experiment config.
Scenario LoadScenario(const ExperimentConfig& cfg);

// Entry point of the svo_sim tool.
int CliMain(int argc, char** argv);

}  // namespace svo

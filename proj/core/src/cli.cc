#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "io_util.h"
#include "svo/errors.h"
#include "svo/io.h"
#include "svo/irl.h"

namespace svo {
namespace {

namespace fs = std::filesystem;

// Thrown for inconsistent option combinations; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioFlags {
  std::string config;
  std::string scenario;
  std::string pv_csv;
  std::string ngsim;
  long vehicle_id = -1;
  bool smooth = false;
  double speed_limit = std::nan("");
  std::string phi;
  std::string weights;
  std::string out;
  int threads = -1;
  std::vector<std::string> overrides;
};

void AddScenarioFlags(CLI::App* app, ScenarioFlags& f, bool sweep) {
  app->add_option("--config", f.config, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app->add_option("--scenario", f.scenario, "built-in scenario name");
  app->add_option("--pv-csv", f.pv_csv, "PV speed profile (t,speed_mps)");
  app->add_option("--ngsim", f.ngsim, "NGSIM trajectory file");
  app->add_option("--vehicle-id", f.vehicle_id, "NGSIM vehicle id");
  app->add_flag("--smooth", f.smooth, "0.5 s moving average on NGSIM speeds");
  app->add_option("--speed-limit", f.speed_limit, "v_L in m/s");
  app->add_option("--phi", f.phi,
                  sweep ? "comma-separated SVO angles (e.g. 0,pi/12)"
                        : "SVO angle (e.g. pi/4)");
  app->add_option("--weights", f.weights, "driver weight profile file");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--threads", f.threads, "sweep worker threads (0 = auto)");
  app->add_option("--set", f.overrides, "override any config key: KEY=VALUE");
}

ExperimentConfig BuildConfig(const ScenarioFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) ApplyKeyValues(LoadKeyValues(f.config), cfg);

  KeyValues flags;
  auto put = [&flags](const std::string& k, const std::string& v) {
    flags.push_back({k, v, 0});
  };
  if (!f.scenario.empty()) put("scenario", f.scenario);
  if (!f.pv_csv.empty()) put("pv_csv", f.pv_csv);
  if (!f.ngsim.empty()) put("ngsim_path", f.ngsim);
  if (f.vehicle_id >= 0) put("ngsim_vehicle", std::to_string(f.vehicle_id));
  if (f.smooth) put("ngsim_smooth", "true");
  if (!std::isnan(f.speed_limit)) {
    put("speed_limit", detail::FormatDouble(f.speed_limit));
  }
  if (!f.phi.empty()) put("phi", f.phi);
  if (!f.weights.empty()) put("weights_file", f.weights);
  if (!f.out.empty()) put("output_dir", f.out);
  if (f.threads >= 0) put("threads", std::to_string(f.threads));
  for (const std::string& o : f.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--set expects KEY=VALUE, got `" + o + "`");
    }
    put(detail::Trim(o.substr(0, eq)), detail::Trim(o.substr(eq + 1)));
  }
  ApplyKeyValues(flags, cfg);

  if (!cfg.pv_csv.empty() && !cfg.ngsim_path.empty()) {
    throw UsageError("conflicting scenario sources: --pv-csv and --ngsim");
  }
  if ((!cfg.pv_csv.empty() || !cfg.ngsim_path.empty()) &&
      cfg.scenario != "synthetic-default") {
    throw UsageError("conflicting scenario sources: --scenario and a file");
  }
  if (!cfg.weights_file.empty()) {
    const DriverWeights w = LoadWeights(cfg.weights_file);
    cfg.sim.planner_weights = w;
  }
  for (double phi : cfg.phi_levels) SvoWeights(phi);
  cfg.sim.Validate();
  return cfg;
}

void LogConfig(const ExperimentConfig& cfg) {
  std::cerr << "# effective configuration\n" << FormatConfig(cfg) << std::flush;
}

std::string Num(double v, const char* fmt = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string OptNum(const std::optional<double>& v) {
  return v ? Num(*v) : std::string("n/a");
}

std::size_t NotConverged(const EpisodeTrace& trace) {
  std::size_t n = 0;
  for (const PlanDiagnostics& d : trace.plans) n += !d.converged;
  return n;
}

int RunCommand(const ScenarioFlags& flags) {
  const ExperimentConfig cfg = BuildConfig(flags);
  if (cfg.phi_levels.size() != 1) {
    throw UsageError("run takes exactly one --phi value; use sweep for more");
  }
  LogConfig(cfg);
  const Scenario scn = LoadScenario(cfg);
  const EpisodeTrace trace = RunEpisode(scn, {cfg.phi_levels[0]}, cfg.sim);
  const TrafficMetrics m = ComputeMetrics(trace);
  ExportResults(trace, m, cfg.sim, scn, cfg.output_dir);
  std::cout << "phi=" << Num(cfg.phi_levels[0], "%.6f")
            << " traffic_avg_gap=" << Num(m.avg_gap)
            << " traffic_avg_headway=" << OptNum(m.avg_headway)
            << " hv0_av_gap=" << Num(m.Pair(kHv0).avg_gap)
            << " not_converged=" << NotConverged(trace) << "\n"
            << "wrote " << (fs::path(cfg.output_dir) / "trace.csv").string()
            << "\n";
  return 0;
}

int SweepCommand(const ScenarioFlags& flags) {
  ExperimentConfig cfg = BuildConfig(flags);
  LogConfig(cfg);
  const Scenario scn = LoadScenario(cfg);
  const std::vector<SweepRow> rows =
      SweepSvo(scn, cfg.phi_levels, cfg.sim, cfg.threads);

  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.output_dir + ": " + ec.message());
  const fs::path table_path = fs::path(cfg.output_dir) / "sweep.csv";
  std::ofstream table(table_path, std::ios::binary | std::ios::trunc);
  if (!table) throw IoError("cannot write " + table_path.string());
  table << "phi,traffic_avg_gap,traffic_avg_headway,hv0_av_avg_gap,"
           "hv0_av_avg_headway,not_converged,error\n";

  std::printf("%-10s %10s %10s %10s %10s %8s\n", "phi", "gap", "headway",
              "hv0_gap", "hv0_hw", "nonconv");
  int failures = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    if (!r.error.empty()) {
      ++failures;
      std::printf("%-10.6f failed: %s\n", r.phi, r.error.c_str());
      table << detail::FormatDouble(r.phi) << ",,,,,,\"" << r.error << "\"\n";
      continue;
    }
    const TrafficMetrics& m = *r.metrics;
    const PairMetrics& hv0 = m.Pair(kHv0);
    ExportResults(*r.trace, m, cfg.sim, scn,
                  fs::path(cfg.output_dir) / ("phi_" + std::to_string(i)));
    std::printf("%-10.6f %10.4f %10s %10.4f %10s %8zu\n", r.phi, m.avg_gap,
                OptNum(m.avg_headway).c_str(), hv0.avg_gap,
                OptNum(hv0.avg_headway).c_str(), NotConverged(*r.trace));
    auto opt = [](const std::optional<double>& v) {
      return v ? detail::FormatDouble(*v) : std::string();
    };
    table << detail::FormatDouble(r.phi) << ','
          << detail::FormatDouble(m.avg_gap) << ',' << opt(m.avg_headway)
          << ',' << detail::FormatDouble(hv0.avg_gap) << ','
          << opt(hv0.avg_headway) << ',' << NotConverged(*r.trace) << ",\n";
  }
  table.close();
  if (!table) throw IoError("failed writing " + table_path.string());
  return failures == 0 ? 0 : 1;
}

struct FitFlags {
  std::string demos;
  std::string weights;
  std::string out;
  int iters = 200;
  double learn_rate = 0.5;
  double tol = 0.01;
  double speed_limit = 25.0;
  bool keep_tau = false;
};

int FitCommand(const FitFlags& f) {
  const std::vector<Demonstration> demos = LoadDemonstrationsCsv(f.demos);
  DriverWeights w0 =
      f.weights.empty() ? DriverWeights::Default() : LoadWeights(f.weights);
  if (!f.keep_tau && f.iters > 0) w0.tau_h = EstimateMinHeadway(demos);
  FitOptions opt;
  opt.learn_rate = f.learn_rate;
  opt.max_iterations = f.iters;
  opt.tolerance = f.tol;
  opt.speed_limit = f.speed_limit;
  std::cerr << "# fit: " << demos.size() << " demonstration(s), iters="
            << f.iters << " learn_rate=" << detail::FormatDouble(f.learn_rate)
            << " tol=" << detail::FormatDouble(f.tol)
            << " tau_h=" << detail::FormatDouble(w0.tau_h) << "\n";
  const FitResult r = FitWeightsMaxEnt(demos, w0, opt);
  if (f.out.empty()) {
    std::printf("w_accel = %.17g\nw_desired_speed = %.17g\n"
                "w_relative_speed = %.17g\nw_relative_distance = %.17g\n"
                "tau_h = %.17g\nd_s = %.17g\n",
                r.weights.w[0], r.weights.w[1], r.weights.w[2], r.weights.w[3],
                r.weights.tau_h, r.weights.d_s);
  } else {
    WriteWeights(f.out, r.weights);
  }
  std::cerr << "# iterations=" << r.iterations
            << " converged=" << (r.converged ? "true" : "false")
            << " max_relative_mismatch="
            << detail::FormatDouble(r.max_relative_mismatch) << "\n";
  return 0;
}

struct NgsimFlags {
  std::string dataset;
  long vehicle_id = -1;
  bool smooth = false;
  double dt = 0.1;
  std::string out;
};

int ExtractCommand(const NgsimFlags& f) {
  NgsimOptions opt;
  opt.dt = f.dt;
  opt.smooth = f.smooth;
  const NgsimExtraction ex = ExtractNgsimVehicle(f.dataset, f.vehicle_id, opt);
  WritePvProfileCsv(f.out, ex.speeds, ex.dt);
  std::cerr << "# vehicle " << f.vehicle_id << ": " << ex.records.size()
            << " frames, " << ex.interpolated_frames << " interpolated, "
            << ex.skipped_rows << " corrupt rows skipped\n";
  std::cout << "wrote " << f.out << " (" << ex.speeds.size() << " samples)\n";
  return 0;
}

struct DemoFlags {
  std::string weights;
  std::string out;
  int count = 4;
  double duration = 30.0;
  double dt = 0.1;
  double speed_limit = 25.0;
  unsigned long seed = 1;
};

// Piecewise-constant-acceleration leader speed trace.
std::vector<double> RandomLeader(std::mt19937_64& rng, double duration,
                                 double dt) {
  std::uniform_real_distribution<double> v0_dist(12.0, 22.0);
  std::uniform_real_distribution<double> acc_dist(-1.5, 1.5);
  std::uniform_real_distribution<double> len_dist(2.0, 5.0);
  const auto n = static_cast<std::size_t>(std::lround(duration / dt)) + 1;
  std::vector<double> v(n);
  double speed = v0_dist(rng);
  double acc = 0.0;
  double left = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (left <= 0.0) {
      acc = acc_dist(rng);
      left = len_dist(rng);
    }
    v[k] = speed;
    speed = std::clamp(speed + acc * dt, 5.0, 24.0);
    left -= dt;
  }
  return v;
}

int GenDemosCommand(const DemoFlags& f) {
  if (f.count < 1) throw UsageError("--count must be >= 1");
  if (!(f.duration > 0.0) || !(f.dt > 0.0)) {
    throw UsageError("--duration and --dt must be positive");
  }
  const DriverWeights w =
      f.weights.empty() ? DriverWeights::Default() : LoadWeights(f.weights);
  const HorizonModel h =
      BuildHorizon(DiscretizeZoh(BuildContinuous(0.45), f.dt), 30);
  const FollowerPlanner planner(h, w, HumanConstraints{}, f.speed_limit,
                                NewtonOptions{});
  std::mt19937_64 rng(f.seed);
  std::vector<Demonstration> demos;
  for (int i = 0; i < f.count; ++i) {
    const std::vector<double> leader = RandomLeader(rng, f.duration, f.dt);
    const LongitudinalState x0{w.d_s + w.tau_h * leader[0], leader[0], 0.0};
    demos.push_back(SynthesizeDemonstration(x0, leader, planner));
  }
  WriteDemonstrationsCsv(f.out, demos);
  std::cout << "wrote " << f.out << " (" << demos.size()
            << " demonstrations)\n";
  return 0;
}

}  // namespace

int CliMain(int argc, char** argv) {
  CLI::App app{"Longitudinal mixed-traffic simulator with an SVO-weighted "
               "Stackelberg AV planner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  ScenarioFlags run_flags, sweep_flags;
  CLI::App* run = app.add_subcommand("run", "simulate one episode");
  AddScenarioFlags(run, run_flags, false);
  CLI::App* sweep = app.add_subcommand("sweep", "one episode per SVO angle");
  AddScenarioFlags(sweep, sweep_flags, true);

  FitFlags fit_flags;
  CLI::App* fit = app.add_subcommand("fit", "fit driver weights to demos");
  fit->add_option("--demos", fit_flags.demos, "demonstration CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--weights", fit_flags.weights, "initial weight profile");
  fit->add_option("--out", fit_flags.out, "write fitted weights here");
  fit->add_option("--iters", fit_flags.iters, "iteration budget");
  fit->add_option("--learn-rate", fit_flags.learn_rate, "step size");
  fit->add_option("--tol", fit_flags.tol, "relative feature mismatch target");
  fit->add_option("--speed-limit", fit_flags.speed_limit, "v_L in m/s");
  fit->add_flag("--keep-tau", fit_flags.keep_tau,
                "keep tau_h from the initial profile instead of estimating it");

  NgsimFlags ng;
  CLI::App* extract =
      app.add_subcommand("extract-ngsim", "NGSIM vehicle to PV profile CSV");
  extract->add_option("--dataset", ng.dataset, "NGSIM file")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--vehicle-id", ng.vehicle_id, "vehicle id")->required();
  extract->add_flag("--smooth", ng.smooth, "0.5 s moving average");
  extract->add_option("--dt", ng.dt, "output sample period");
  extract->add_option("--out", ng.out, "output CSV")->required();

  DemoFlags df;
  CLI::App* gen =
      app.add_subcommand("gen-demos", "synthesize demonstrations");
  gen->add_option("--weights", df.weights, "weight profile file");
  gen->add_option("--out", df.out, "output CSV")->required();
  gen->add_option("--count", df.count, "number of demonstrations");
  gen->add_option("--duration", df.duration, "seconds per demonstration");
  gen->add_option("--dt", df.dt, "sample period");
  gen->add_option("--speed-limit", df.speed_limit, "v_L in m/s");
  gen->add_option("--seed", df.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return RunCommand(run_flags);
    if (sweep->parsed()) return SweepCommand(sweep_flags);
    if (fit->parsed()) return FitCommand(fit_flags);
    if (extract->parsed()) return ExtractCommand(ng);
    if (gen->parsed()) return GenDemosCommand(df);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace svo

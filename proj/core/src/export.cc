#include <cmath>
#include <fstream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "config_table.h"
#include "io_util.h"
#include "svo/errors.h"
#include "svo/io.h"

namespace svo {
namespace {

using detail::FormatDouble;
using detail::ParseDouble;
using detail::SplitFields;
using detail::Trim;
using Json = nlohmann::ordered_json;

const char* const kTraceHeader =
    "step,t,vehicle,gap_m,speed_mps,accel_mps2,control_mps2";
const char* const kPlanHeader =
    "step,cost_egoistic,cost_courtesy,cost_total,converged,inner_feasible,"
    "hv0_feasible,iterations,av_violation";

Json OptionalNumber(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json WeightsJson(const DriverWeights& w) {
  Json j;
  j["w_accel"] = w.w[0];
  j["w_desired_speed"] = w.w[1];
  j["w_relative_speed"] = w.w[2];
  j["w_relative_distance"] = w.w[3];
  j["tau_h"] = w.tau_h;
  j["d_s"] = w.d_s;
  return j;
}

Json ConfigJson(const SimulationConfig& cfg) {
  SimulationConfig copy = cfg;
  Json j;
  for (const auto& p : detail::IntParams()) j[p.key] = p.ref(copy);
  for (const auto& p : detail::RealParams()) j[p.key] = p.ref(copy);
  j["speed_caps_from_pv"] = cfg.speed_caps_from_pv;
  j["plant_weights"] =
      cfg.plant_weights ? WeightsJson(*cfg.plant_weights) : Json(nullptr);
  return j;
}

std::size_t VehicleIndexOf(const std::string& name, std::size_t line) {
  for (std::size_t v = 0; v < kVehicleNames.size(); ++v) {
    if (name == kVehicleNames[v]) return v;
  }
  throw ParseError("line " + std::to_string(line) + ": unknown vehicle `" +
                       name + "`",
                   line);
}

double Field(const std::string& text, std::size_t line) {
  double v;
  if (!ParseDouble(text, v)) {
    throw ParseError("line " + std::to_string(line) + ": malformed number `" +
                         text + "`",
                     line);
  }
  return v;
}

}  // namespace

std::string MetricsJson(const EpisodeTrace& trace,
                        const TrafficMetrics& metrics,
                        const SimulationConfig& cfg, const Scenario& scn) {
  const SimulationConfig eff = EffectiveConfig(cfg, scn);
  Json j;
  j["version"] = kArtifactVersion;
  j["label"] = trace.label;
  j["phi"] = trace.phi;
  j["dt"] = trace.dt;
  j["steps"] = trace.size();

  Json scenario;
  scenario["label"] = scn.label;
  scenario["speed_limit"] = scn.speed_limit;
  scenario["pv_samples"] = scn.pv_speed.size();
  scenario["pv_max_speed"] = scn.MaxPvSpeed();
  j["scenario"] = scenario;

  j["config"] = ConfigJson(cfg);
  Json caps;
  caps["av.v_max"] = eff.av.v_max;
  caps["human.v_max"] = eff.human.v_max;
  caps["idm.v_des"] = eff.idm.v_des;
  j["effective_speed_caps"] = caps;

  Json pairs = Json::array();
  for (const PairMetrics& p : metrics.pairs) {
    Json pj;
    pj["follower"] = p.follower;
    pj["leader"] = p.leader;
    pj["avg_gap"] = p.avg_gap;
    pj["avg_headway"] = OptionalNumber(p.avg_headway);
    pj["min_gap"] = p.min_gap;
    pj["max_gap"] = p.max_gap;
    pj["samples"] = p.samples;
    pj["headway_excluded"] = p.headway_excluded;
    pairs.push_back(pj);
  }
  j["pairs"] = pairs;

  Json traffic;
  traffic["avg_gap"] = metrics.avg_gap;
  traffic["avg_headway"] = OptionalNumber(metrics.avg_headway);
  traffic["headway_speed_threshold"] = TrafficMetrics::kHeadwaySpeedEps;
  std::size_t excluded = 0;
  for (const PairMetrics& p : metrics.pairs) excluded += p.headway_excluded;
  traffic["headway_excluded"] = excluded;
  j["traffic"] = traffic;

  std::size_t not_converged = 0, inner_infeasible = 0, hv0_infeasible = 0;
  double worst_violation = 0.0;
  for (const PlanDiagnostics& d : trace.plans) {
    not_converged += !d.converged;
    inner_infeasible += !d.inner_feasible;
    hv0_infeasible += !d.hv0_feasible;
    worst_violation = std::max(worst_violation, d.av_violation);
  }
  Json planner;
  planner["not_converged"] = not_converged;
  planner["inner_infeasible"] = inner_infeasible;
  planner["hv0_infeasible"] = hv0_infeasible;
  planner["max_av_violation"] = worst_violation;
  j["planner"] = planner;
  return j.dump(2) + "\n";
}

void ExportResults(const EpisodeTrace& trace, const TrafficMetrics& metrics,
                   const SimulationConfig& cfg, const Scenario& scn,
                   const std::filesystem::path& outdir) {
  if (trace.size() == 0) {
    throw InvalidParameter("refusing to export an empty trace");
  }
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw IoError("cannot create " + outdir.string() + ": " + ec.message());

  const auto trace_path = outdir / "trace.csv";
  std::ofstream out = detail::OpenOutput(trace_path);
  out << kTraceHeader << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const std::string t = FormatDouble(static_cast<double>(k) * trace.dt);
    for (std::size_t v = 0; v < kVehicleNames.size(); ++v) {
      const VehicleSample& s = trace.samples[v][k];
      out << k << ',' << t << ',' << kVehicleNames[v] << ','
          << FormatDouble(s.gap) << ',' << FormatDouble(s.speed) << ','
          << FormatDouble(s.accel) << ',' << FormatDouble(s.control) << '\n';
    }
  }
  detail::CloseOutput(out, trace_path);

  const auto plan_path = outdir / "plans.csv";
  std::ofstream plans = detail::OpenOutput(plan_path);
  plans << kPlanHeader << '\n';
  for (std::size_t k = 0; k < trace.plans.size(); ++k) {
    const PlanDiagnostics& d = trace.plans[k];
    plans << k << ',' << FormatDouble(d.cost_egoistic) << ','
          << FormatDouble(d.cost_courtesy) << ',' << FormatDouble(d.cost_total)
          << ',' << int(d.converged) << ',' << int(d.inner_feasible) << ','
          << int(d.hv0_feasible) << ',' << d.iterations << ','
          << FormatDouble(d.av_violation) << '\n';
  }
  detail::CloseOutput(plans, plan_path);

  const auto metrics_path = outdir / "metrics.json";
  std::ofstream mj = detail::OpenOutput(metrics_path);
  mj << MetricsJson(trace, metrics, cfg, scn);
  detail::CloseOutput(mj, metrics_path);
}

EpisodeTrace ReadResults(const std::filesystem::path& outdir) {
  EpisodeTrace trace;
  {
    std::ifstream in = detail::OpenInput(outdir / "metrics.json");
    Json j;
    try {
      j = Json::parse(in);
      trace.label = j.at("label").get<std::string>();
      trace.phi = j.at("phi").get<double>();
      trace.dt = j.at("dt").get<double>();
    } catch (const Json::exception& e) {
      throw ParseError((outdir / "metrics.json").string() + ": " + e.what(), 0);
    }
  }

  std::ifstream in = detail::OpenInput(outdir / "trace.csv");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = Trim(line);
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != kTraceHeader) throw ParseError("trace.csv: bad header", 1);
      continue;
    }
    const auto f = SplitFields(line, ',');
    if (f.size() != 7) {
      throw ParseError("trace.csv line " + std::to_string(lineno) +
                           ": expected 7 fields",
                       lineno);
    }
    const auto step = static_cast<std::size_t>(Field(f[0], lineno));
    const std::size_t v = VehicleIndexOf(f[2], lineno);
    auto& column = trace.samples[v];
    if (column.size() != step) {
      throw ParseError("trace.csv line " + std::to_string(lineno) +
                           ": steps out of order",
                       lineno);
    }
    column.push_back({Field(f[3], lineno), Field(f[4], lineno),
                      Field(f[5], lineno), Field(f[6], lineno)});
  }

  std::ifstream pin = detail::OpenInput(outdir / "plans.csv");
  lineno = 0;
  while (std::getline(pin, line)) {
    ++lineno;
    line = Trim(line);
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != kPlanHeader) throw ParseError("plans.csv: bad header", 1);
      continue;
    }
    const auto f = SplitFields(line, ',');
    if (f.size() != 9) {
      throw ParseError("plans.csv line " + std::to_string(lineno) +
                           ": expected 9 fields",
                       lineno);
    }
    PlanDiagnostics d;
    d.cost_egoistic = Field(f[1], lineno);
    d.cost_courtesy = Field(f[2], lineno);
    d.cost_total = Field(f[3], lineno);
    d.converged = Field(f[4], lineno) != 0.0;
    d.inner_feasible = Field(f[5], lineno) != 0.0;
    d.hv0_feasible = Field(f[6], lineno) != 0.0;
    d.iterations = static_cast<int>(Field(f[7], lineno));
    d.av_violation = Field(f[8], lineno);
    trace.plans.push_back(d);
  }
  for (const auto& column : trace.samples) {
    if (column.size() != trace.plans.size()) {
      throw ParseError("trace.csv and plans.csv disagree on the step count", 0);
    }
  }
  return trace;
}

}  // namespace svo

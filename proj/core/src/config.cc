#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "config_table.h"
#include "io_util.h"
#include "svo/errors.h"
#include "svo/io.h"

namespace svo {
namespace detail {

namespace {

ConfigParam Real(const char* key, double SimulationConfig::*member) {
  return {key, [member](SimulationConfig& c) -> double& { return c.*member; }};
}

template <typename Group>
ConfigParam Real(const char* key, Group SimulationConfig::*group,
                 double Group::*member) {
  return {key, [group, member](SimulationConfig& c) -> double& {
            return (c.*group).*member;
          }};
}

ConfigParam Weight(const char* key, int index) {
  return {key, [index](SimulationConfig& c) -> double& {
            return c.planner_weights.w[index];
          }};
}

ConfigParam Solver(const char* key, NewtonOptions SimulationConfig::*group,
                   double NewtonOptions::*member) {
  return Real(key, group, member);
}

}  // namespace

const std::vector<ConfigParam>& RealParams() {
  static const std::vector<ConfigParam> params = [] {
    std::vector<ConfigParam> p;
    p.push_back(Real("dt", &SimulationConfig::dt));
    p.push_back(Real("rho", &SimulationConfig::rho));
    p.push_back(Real("ego.d_s", &SimulationConfig::ego, &EgoisticParams::d_s));
    p.push_back(Real("ego.tau_r", &SimulationConfig::ego, &EgoisticParams::tau_r));
    p.push_back(Real("av.d_min", &SimulationConfig::av, &AvConstraints::d_min));
    p.push_back(Real("av.d_max", &SimulationConfig::av, &AvConstraints::d_max));
    p.push_back(Real("av.v_min", &SimulationConfig::av, &AvConstraints::v_min));
    p.push_back(Real("av.v_max", &SimulationConfig::av, &AvConstraints::v_max));
    p.push_back(Real("av.u_min", &SimulationConfig::av, &AvConstraints::u_min));
    p.push_back(Real("av.u_max", &SimulationConfig::av, &AvConstraints::u_max));
    p.push_back(Real("av.a_min", &SimulationConfig::av, &AvConstraints::a_min));
    p.push_back(Real("av.a_max", &SimulationConfig::av, &AvConstraints::a_max));
    p.push_back(Real("human.d_min", &SimulationConfig::human, &HumanConstraints::d_min));
    p.push_back(Real("human.v_min", &SimulationConfig::human, &HumanConstraints::v_min));
    p.push_back(Real("human.v_max", &SimulationConfig::human, &HumanConstraints::v_max));
    p.push_back(Real("human.u_min", &SimulationConfig::human, &HumanConstraints::u_min));
    p.push_back(Real("human.u_max", &SimulationConfig::human, &HumanConstraints::u_max));
    p.push_back(Real("idm.a_max", &SimulationConfig::idm, &IdmParams::a_max));
    p.push_back(Real("idm.b_comf", &SimulationConfig::idm, &IdmParams::b_comf));
    p.push_back(Real("idm.v_des", &SimulationConfig::idm, &IdmParams::v_des));
    p.push_back(Real("idm.tau_d", &SimulationConfig::idm, &IdmParams::tau_d));
    p.push_back(Real("idm.s0", &SimulationConfig::idm, &IdmParams::s0));
    p.push_back(Real("idm.delta", &SimulationConfig::idm, &IdmParams::delta));
    p.push_back(Weight("w_accel", 0));
    p.push_back(Weight("w_desired_speed", 1));
    p.push_back(Weight("w_relative_speed", 2));
    p.push_back(Weight("w_relative_distance", 3));
    p.push_back(Real("tau_h", &SimulationConfig::planner_weights, &DriverWeights::tau_h));
    p.push_back(Real("d_s", &SimulationConfig::planner_weights, &DriverWeights::d_s));
    using S = SimulationConfig;
    using N = NewtonOptions;
    p.push_back(Solver("outer.gradient_tolerance", &S::outer_solver, &N::gradient_tolerance));
    p.push_back(Solver("outer.decrease_tolerance", &S::outer_solver, &N::decrease_tolerance));
    p.push_back(Solver("outer.penalty_weight", &S::outer_solver, &N::penalty_weight));
    p.push_back(Solver("outer.feasibility_tolerance", &S::outer_solver, &N::feasibility_tolerance));
    p.push_back(Solver("outer.max_step", &S::outer_solver, &N::max_step));
    p.push_back(Solver("inner.gradient_tolerance", &S::inner_solver, &N::gradient_tolerance));
    p.push_back(Solver("inner.decrease_tolerance", &S::inner_solver, &N::decrease_tolerance));
    p.push_back(Solver("inner.penalty_weight", &S::inner_solver, &N::penalty_weight));
    p.push_back(Solver("inner.feasibility_tolerance", &S::inner_solver, &N::feasibility_tolerance));
    p.push_back(Solver("inner.max_step", &S::inner_solver, &N::max_step));
    return p;
  }();
  return params;
}

const std::vector<IntParam>& IntParams() {
  static const std::vector<IntParam> params = {
      {"horizon_steps", [](SimulationConfig& c) -> int& { return c.horizon_steps; }},
      {"outer.max_iterations",
       [](SimulationConfig& c) -> int& { return c.outer_solver.max_iterations; }},
      {"outer.max_penalty_rounds",
       [](SimulationConfig& c) -> int& { return c.outer_solver.max_penalty_rounds; }},
      {"inner.max_iterations",
       [](SimulationConfig& c) -> int& { return c.inner_solver.max_iterations; }},
      {"inner.max_penalty_rounds",
       [](SimulationConfig& c) -> int& { return c.inner_solver.max_penalty_rounds; }},
  };
  return params;
}

}  // namespace detail

namespace {

using detail::FormatDouble;
using detail::ParseDouble;
using detail::Trim;

std::string Where(std::size_t line) {
  return line ? "line " + std::to_string(line) + ": " : std::string();
}

double NumberOrThrow(const std::string& key, const std::string& value,
                     std::size_t line) {
  double v;
  if (!ParseDouble(value, v) || !std::isfinite(v)) {
    throw ParseError(Where(line) + "`" + key + "` expects a number, got `" +
                         value + "`",
                     line);
  }
  return v;
}

bool BoolOrThrow(const std::string& key, const std::string& value,
                 std::size_t line) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ParseError(
      Where(line) + "`" + key + "` expects true/false, got `" + value + "`",
      line);
}

long IntegerOrThrow(const std::string& key, const std::string& value,
                    std::size_t line) {
  const double v = NumberOrThrow(key, value, line);
  if (v != std::floor(v) || std::abs(v) > 1e15) {
    throw ParseError(
        Where(line) + "`" + key + "` expects an integer, got `" + value + "`",
        line);
  }
  return static_cast<long>(v);
}

}  // namespace

KeyValues ParseKeyValues(std::istream& in) {
  KeyValues out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) +
                           ": expected `key = value`",
                       lineno);
    }
    std::string key = Trim(line.substr(0, eq));
    std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("line " + std::to_string(lineno) + ": empty key",
                       lineno);
    }
    if (!seen.insert(key).second) {
      throw ParseError("line " + std::to_string(lineno) + ": duplicate key `" +
                           key + "`",
                       lineno);
    }
    out.push_back({std::move(key), std::move(value), lineno});
  }
  return out;
}

KeyValues LoadKeyValues(const std::filesystem::path& path) {
  std::ifstream in = detail::OpenInput(path);
  try {
    return ParseKeyValues(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

double ParseAngle(const std::string& raw) {
  const std::string text = Trim(raw);
  double v;
  if (ParseDouble(text, v)) {
    if (!std::isfinite(v)) throw InvalidParameter("angle must be finite");
    return v;
  }
  const auto pi_pos = text.find("pi");
  if (pi_pos == std::string::npos) {
    throw InvalidParameter("cannot parse angle `" + raw + "`");
  }
  double numer = 1.0;
  double denom = 1.0;
  std::string head = Trim(text.substr(0, pi_pos));
  if (!head.empty()) {
    if (head.back() == '*') head.pop_back();
    if (!ParseDouble(Trim(head), numer)) {
      throw InvalidParameter("cannot parse angle `" + raw + "`");
    }
  }
  const std::string tail = Trim(text.substr(pi_pos + 2));
  if (!tail.empty()) {
    if (tail.front() != '/' || !ParseDouble(Trim(tail.substr(1)), denom) ||
        denom == 0.0) {
      throw InvalidParameter("cannot parse angle `" + raw + "`");
    }
  }
  return numer * std::numbers::pi / denom;
}

std::vector<double> ParseAngleList(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : detail::SplitFields(text, ',')) {
    if (item.empty()) throw InvalidParameter("empty entry in angle list");
    out.push_back(ParseAngle(item));
  }
  return out;
}

void ApplyKeyValues(const KeyValues& kv, ExperimentConfig& cfg) {
  for (const auto& [key, value, index] : kv) {
    bool handled = false;
    for (const auto& p : detail::RealParams()) {
      if (key == p.key) {
        p.ref(cfg.sim) = NumberOrThrow(key, value, index);
        handled = true;
      }
    }
    for (const auto& p : detail::IntParams()) {
      if (key == p.key) {
        p.ref(cfg.sim) = static_cast<int>(IntegerOrThrow(key, value, index));
        handled = true;
      }
    }
    if (handled) continue;
    if (key == "scenario") {
      cfg.scenario = value;
    } else if (key == "pv_csv") {
      cfg.pv_csv = value;
    } else if (key == "ngsim_path") {
      cfg.ngsim_path = value;
    } else if (key == "ngsim_vehicle") {
      cfg.ngsim_vehicle = IntegerOrThrow(key, value, index);
    } else if (key == "ngsim_smooth") {
      cfg.ngsim_smooth = BoolOrThrow(key, value, index);
    } else if (key == "speed_limit") {
      cfg.speed_limit = NumberOrThrow(key, value, index);
    } else if (key == "speed_caps_from_pv") {
      cfg.sim.speed_caps_from_pv = BoolOrThrow(key, value, index);
    } else if (key == "phi") {
      try {
        cfg.phi_levels = ParseAngleList(value);
      } catch (const InvalidParameter& e) {
        throw ParseError(Where(index) + "`phi`: " + e.what(), index);
      }
    } else if (key == "weights_file") {
      cfg.weights_file = value;
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "seed") {
      const long s = IntegerOrThrow(key, value, index);
      if (s < 0) throw ParseError(Where(index) + "`seed` must be >= 0", index);
      cfg.seed = static_cast<unsigned long>(s);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(IntegerOrThrow(key, value, index));
    } else {
      throw ParseError(Where(index) + "unknown configuration key `" + key + "`",
                       index);
    }
  }
}

std::string FormatConfig(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "scenario = " << cfg.scenario << '\n';
  if (!cfg.pv_csv.empty()) out << "pv_csv = " << cfg.pv_csv << '\n';
  if (!cfg.ngsim_path.empty()) {
    out << "ngsim_path = " << cfg.ngsim_path << '\n';
    out << "ngsim_vehicle = " << cfg.ngsim_vehicle << '\n';
    out << "ngsim_smooth = " << (cfg.ngsim_smooth ? "true" : "false") << '\n';
  }
  out << "speed_limit = " << FormatDouble(cfg.speed_limit) << '\n';
  out << "phi = ";
  for (std::size_t i = 0; i < cfg.phi_levels.size(); ++i) {
    out << (i ? "," : "") << FormatDouble(cfg.phi_levels[i]);
  }
  out << '\n';
  if (!cfg.weights_file.empty()) {
    out << "weights_file = " << cfg.weights_file << '\n';
  }
  out << "output_dir = " << cfg.output_dir << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "threads = " << cfg.threads << '\n';
  out << "speed_caps_from_pv = "
      << (cfg.sim.speed_caps_from_pv ? "true" : "false") << '\n';
  SimulationConfig sim = cfg.sim;
  for (const auto& p : detail::IntParams()) {
    out << p.key << " = " << p.ref(sim) << '\n';
  }
  for (const auto& p : detail::RealParams()) {
    out << p.key << " = " << FormatDouble(p.ref(sim)) << '\n';
  }
  return out.str();
}

DriverWeights LoadWeights(const std::filesystem::path& path) {
  const KeyValues kv = LoadKeyValues(path);
  DriverWeights w = DriverWeights::Default();
  for (const auto& [key, value, index] : kv) {
    const double v = NumberOrThrow(key, value, index);
    if (key == "w_accel") {
      w.w[0] = v;
    } else if (key == "w_desired_speed") {
      w.w[1] = v;
    } else if (key == "w_relative_speed") {
      w.w[2] = v;
    } else if (key == "w_relative_distance") {
      w.w[3] = v;
    } else if (key == "tau_h") {
      w.tau_h = v;
    } else if (key == "d_s") {
      w.d_s = v;
    } else {
      throw ParseError(path.string() + ": " + Where(index) +
                           "unknown weight key `" + key + "`",
                       index);
    }
  }
  w.Validate();
  return w;
}

void WriteWeights(const std::filesystem::path& path, const DriverWeights& w) {
  std::ofstream out = detail::OpenOutput(path);
  out << "w_accel = " << FormatDouble(w.w[0]) << '\n'
      << "w_desired_speed = " << FormatDouble(w.w[1]) << '\n'
      << "w_relative_speed = " << FormatDouble(w.w[2]) << '\n'
      << "w_relative_distance = " << FormatDouble(w.w[3]) << '\n'
      << "tau_h = " << FormatDouble(w.tau_h) << '\n'
      << "d_s = " << FormatDouble(w.d_s) << '\n';
  detail::CloseOutput(out, path);
}

Scenario LoadScenario(const ExperimentConfig& cfg) {
  const bool csv = !cfg.pv_csv.empty();
  const bool ngsim = !cfg.ngsim_path.empty();
  if (csv && ngsim) {
    throw InvalidParameter("conflicting scenario sources: pv_csv and ngsim_path");
  }
  if ((csv || ngsim) && cfg.scenario != "synthetic-default" &&
      !cfg.scenario.empty()) {
    throw InvalidParameter("conflicting scenario sources: scenario `" +
                           cfg.scenario + "` and a file source");
  }
  if (csv) {
    const PvProfile p = LoadPvProfileCsv(cfg.pv_csv);
    if (std::abs(p.dt - cfg.sim.dt) > 1e-6) {
      throw InvalidParameter("PV profile dt " + FormatDouble(p.dt) +
                             " differs from simulation dt " +
                             FormatDouble(cfg.sim.dt));
    }
    return MakeProfileScenario(cfg.pv_csv, p.speeds, cfg.speed_limit, cfg.sim);
  }
  if (ngsim) {
    if (cfg.ngsim_vehicle < 0) {
      throw InvalidParameter("ngsim_path requires ngsim_vehicle");
    }
    NgsimOptions opt;
    opt.dt = cfg.sim.dt;
    opt.smooth = cfg.ngsim_smooth;
    const NgsimExtraction ex =
        ExtractNgsimVehicle(cfg.ngsim_path, cfg.ngsim_vehicle, opt);
    return MakeProfileScenario("ngsim-" + std::to_string(cfg.ngsim_vehicle),
                               ex.speeds, cfg.speed_limit, cfg.sim);
  }
  if (cfg.scenario == "synthetic-default") {
    Scenario scn = MakeSyntheticScenario(cfg.sim);
    if (cfg.speed_limit != scn.speed_limit) {
      scn.speed_limit = cfg.speed_limit;
      InitializeAtEquilibrium(scn, cfg.sim);
    }
    return scn;
  }
  throw InvalidParameter("unknown scenario `" + cfg.scenario + "`");
}

}  // namespace svo

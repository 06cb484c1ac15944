#include "starris/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace starris {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void Bad(const std::string& key, const std::string& value, const char* what) {
  throw ContractError("config: " + key + " = '" + value + "': " + what);
}

double ToDouble(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) Bad(key, text, "not a finite number");
  return v;
}

std::int64_t ToInt(const std::string& key, const std::string& text) {
  std::int64_t v = 0;
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) Bad(key, text, "not an integer");
  return v;
}

int ToPositiveInt(const std::string& key, const std::string& text) {
  const std::int64_t v = ToInt(key, text);
  if (v < 1 || v > 1'000'000) Bad(key, text, "must be a positive integer");
  return static_cast<int>(v);
}

Vec3 ToVec3(const std::string& key, const std::string& text) {
  const auto parts = SplitList(text);
  if (parts.size() != 3) Bad(key, text, "expected x,y,z");
  return {ToDouble(key, parts[0]), ToDouble(key, parts[1]), ToDouble(key, parts[2])};
}

std::vector<std::uint64_t> ToSeeds(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& item : SplitList(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      const std::int64_t s = ToInt(key, item);
      if (s < 0) Bad(key, text, "seeds are non-negative");
      seeds.push_back(static_cast<std::uint64_t>(s));
      continue;
    }
    const std::int64_t a = ToInt(key, Trim(item.substr(0, dots)));
    const std::int64_t b = ToInt(key, Trim(item.substr(dots + 2)));
    if (a < 0 || b < a || b - a > 100000) Bad(key, text, "bad seed range");
    for (std::int64_t s = a; s <= b; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  }
  return seeds;
}

std::string Vec3Text(const Vec3& v) {
  return FormatNumber(v.x()) + "," + FormatNumber(v.y()) + "," + FormatNumber(v.z());
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

const char* ToString(SweepParam p) {
  switch (p) {
    case SweepParam::kNone: return "none";
    case SweepParam::kPmaxDbm: return "pmax_dbm";
    case SweepParam::kRisElements: return "ris_elements";
    case SweepParam::kStaticPowerDbm: return "static_power_dbm";
    case SweepParam::kNoiseDbm: return "noise_dbm";
  }
  return "?";
}

SweepParam ParseSweepParam(const std::string& text) {
  for (SweepParam p : {SweepParam::kNone, SweepParam::kPmaxDbm, SweepParam::kRisElements,
                       SweepParam::kStaticPowerDbm, SweepParam::kNoiseDbm}) {
    if (text == ToString(p)) return p;
  }
  throw ContractError("unknown sweep parameter '" + text + "'");
}

std::string FormatNumber(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x == 0.0 ? 0.0 : x);  // no "-0"
  return buf;
}

void ExperimentConfig::Validate() const {
  dims.Validate();
  if (seeds.empty()) throw ContractError("config: empty seed list");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ContractError("config: seeds must be distinct");
  }
  if (modes.empty()) throw ContractError("config: empty mode list");
  if (sweep != SweepParam::kNone && values.empty()) throw ContractError("config: sweep without values");
  if (sweep == SweepParam::kRisElements) {
    for (double v : values)
      if (v < 1.0 || v != std::floor(v)) throw ContractError("config: element counts must be positive integers");
  }
  if (!(user_radius >= 0.0)) throw ContractError("config: negative user radius");
  ao.Validate();
  oracle_grid.Validate();
}

ExperimentConfig ExperimentConfig::At(double value) const {
  ExperimentConfig c = *this;
  switch (sweep) {
    case SweepParam::kNone: break;
    case SweepParam::kPmaxDbm: c.pmax_dbm = value; break;
    case SweepParam::kRisElements: c.dims.num_ris_elements = static_cast<int>(value); break;
    case SweepParam::kStaticPowerDbm: c.static_power_dbm = value; break;
    case SweepParam::kNoiseDbm: c.noise_dbm = value; break;
  }
  return c;
}

SystemInstance ExperimentConfig::Instance(std::uint64_t seed) const {
  SystemInstance inst;
  inst.dims = dims;
  inst.power.p_max_watts = DbmToWatt(pmax_dbm);
  inst.power.static_power_watts = DbmToWatt(static_power_dbm);
  inst.power.noise_power_watts = DbmToWatt(noise_dbm);
  inst.power.qos_rate_threshold = rate_threshold;
  Geometry g = Geometry::Circle(dims.num_users, user_center, user_radius);
  g.bs_position = bs_position;
  g.ris_position = ris_position;
  g.ris_plane_normal = ris_normal;
  inst.channels = GenerateInstance(seed, dims, g, path_loss);
  inst.Validate();
  return inst;
}

ExperimentConfig ParseConfig(std::istream& in) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ContractError("config: repeated key '" + key + "'");

    if (key == "users") c.dims.num_users = ToPositiveInt(key, value);
    else if (key == "antennas") c.dims.num_bs_antennas = ToPositiveInt(key, value);
    else if (key == "elements") c.dims.num_ris_elements = ToPositiveInt(key, value);
    else if (key == "pmax_dbm") c.pmax_dbm = ToDouble(key, value);
    else if (key == "static_power_dbm") c.static_power_dbm = ToDouble(key, value);
    else if (key == "noise_dbm") c.noise_dbm = ToDouble(key, value);
    else if (key == "rate_threshold") c.rate_threshold = ToDouble(key, value);
    else if (key == "bs_position") c.bs_position = ToVec3(key, value);
    else if (key == "ris_position") c.ris_position = ToVec3(key, value);
    else if (key == "ris_normal") c.ris_normal = ToVec3(key, value);
    else if (key == "user_center") c.user_center = ToVec3(key, value);
    else if (key == "user_radius") c.user_radius = ToDouble(key, value);
    else if (key == "path_loss_exponent") c.path_loss.exponent = ToDouble(key, value);
    else if (key == "ref_loss_db") c.path_loss.ref_loss_db = ToDouble(key, value);
    else if (key == "seeds") c.seeds = ToSeeds(key, value);
    else if (key == "modes") {
      c.modes.clear();
      for (const auto& m : SplitList(value)) c.modes.push_back(ParseRisMode(m));
    } else if (key == "sweep") c.sweep = ParseSweepParam(value);
    else if (key == "values") {
      c.values.clear();
      for (const auto& v : SplitList(value)) c.values.push_back(ToDouble(key, v));
    } else if (key == "ao_starts") c.ao.starts = ToPositiveInt(key, value);
    else if (key == "ao_start_seed") {
      const std::int64_t s = ToInt(key, value);
      if (s < 0) Bad(key, value, "must be non-negative");
      c.ao.start_seed = static_cast<std::uint64_t>(s);
    } else if (key == "ao_tolerance") c.ao.tolerance = ToDouble(key, value);
    else if (key == "ao_max_iterations") c.ao.max_iterations = ToPositiveInt(key, value);
    else if (key == "oracle_phase_points") c.oracle_grid.phase_points = ToPositiveInt(key, value);
    else if (key == "oracle_beta_step") c.oracle_grid.beta_step = ToDouble(key, value);
    else if (key == "oracle_power_points") c.oracle_grid.power_points = ToPositiveInt(key, value);
    else if (key == "oracle_sphere_points") c.oracle_grid.sphere_points = ToPositiveInt(key, value);
    else if (key == "oracle_directions") {
      if (value == "matched_filter") c.oracle_grid.directions = BeamDirections::kMatchedFilter;
      else if (value == "sphere") c.oracle_grid.directions = BeamDirections::kSphere;
      else Bad(key, value, "expected matched_filter or sphere");
    } else {
      throw ContractError("config: unknown key '" + key + "'");
    }
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open config file '" + path + "'");
  return ParseConfig(in);
}

void WriteConfig(std::ostream& out, const ExperimentConfig& c) {
  out << "users = " << c.dims.num_users << "\n"
      << "antennas = " << c.dims.num_bs_antennas << "\n"
      << "elements = " << c.dims.num_ris_elements << "\n"
      << "pmax_dbm = " << FormatNumber(c.pmax_dbm) << "\n"
      << "static_power_dbm = " << FormatNumber(c.static_power_dbm) << "\n"
      << "noise_dbm = " << FormatNumber(c.noise_dbm) << "\n"
      << "rate_threshold = " << FormatNumber(c.rate_threshold) << "\n"
      << "bs_position = " << Vec3Text(c.bs_position) << "\n"
      << "ris_position = " << Vec3Text(c.ris_position) << "\n"
      << "ris_normal = " << Vec3Text(c.ris_normal) << "\n"
      << "user_center = " << Vec3Text(c.user_center) << "\n"
      << "user_radius = " << FormatNumber(c.user_radius) << "\n"
      << "path_loss_exponent = " << FormatNumber(c.path_loss.exponent) << "\n"
      << "ref_loss_db = " << FormatNumber(c.path_loss.ref_loss_db) << "\n";
  out << "seeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) out << (i ? "," : "") << c.seeds[i];
  out << "\nmodes = ";
  for (std::size_t i = 0; i < c.modes.size(); ++i) out << (i ? "," : "") << ToString(c.modes[i]);
  out << "\nsweep = " << ToString(c.sweep) << "\n";
  if (!c.values.empty()) {
    out << "values = ";
    for (std::size_t i = 0; i < c.values.size(); ++i) out << (i ? "," : "") << FormatNumber(c.values[i]);
    out << "\n";
  }
  out << "ao_starts = " << c.ao.starts << "\n"
      << "ao_start_seed = " << c.ao.start_seed << "\n"
      << "ao_tolerance = " << FormatNumber(c.ao.tolerance) << "\n"
      << "ao_max_iterations = " << c.ao.max_iterations << "\n"
      << "oracle_phase_points = " << c.oracle_grid.phase_points << "\n"
      << "oracle_beta_step = " << FormatNumber(c.oracle_grid.beta_step) << "\n"
      << "oracle_power_points = " << c.oracle_grid.power_points << "\n"
      << "oracle_directions = "
      << (c.oracle_grid.directions == BeamDirections::kSphere ? "sphere" : "matched_filter") << "\n"
      << "oracle_sphere_points = " << c.oracle_grid.sphere_points << "\n";
}

SweepTable RunSweep(const ExperimentConfig& config) {
  config.Validate();
  SweepTable table;
  table.param = config.sweep;
  const std::vector<double> values =
      config.sweep == SweepParam::kNone ? std::vector<double>{0.0} : config.values;
  for (double value : values) {
    const ExperimentConfig at = config.At(value);
    for (RisMode mode : config.modes) {
      std::vector<double> ee, se, iters;
      int feasible = 0;
      for (std::uint64_t seed : config.seeds) {
        SweepRow row;
        row.value = value;
        row.mode = mode;
        row.seed = seed;
        SolveReport rep;
        try {
          AoConfig ao = at.ao;
          ao.mode = mode;
          rep = AlternatingOptimize(at.Instance(seed), ao);
          row.min_ee = rep.min_ee;
          row.avg_se = rep.avg_se;
          row.outer_iterations = rep.outer_iterations;
          row.feasible = rep.feasible && rep.status != AoStatus::kInfeasible;
          row.status = ToString(rep.status);
          if (rep.rank_one_failure) row.status += "+rank_one_failure";
        } catch (const std::exception& e) {
          row.min_ee = std::nan("");
          row.avg_se = std::nan("");
          row.status = std::string("error: ") + e.what();
        }
        if (!std::isnan(row.min_ee)) {
          ee.push_back(row.min_ee);
          se.push_back(row.avg_se);
          iters.push_back(row.outer_iterations);
        }
        if (row.feasible) ++feasible;
        table.rows.push_back(row);
        table.reports.push_back(std::move(rep));
      }
      SweepSummary s;
      s.value = value;
      s.mode = mode;
      s.mean_min_ee = ee.empty() ? std::nan("") : Mean(ee);
      s.mean_avg_se = se.empty() ? std::nan("") : Mean(se);
      s.mean_outer_iterations = iters.empty() ? std::nan("") : Mean(iters);
      s.feasible = feasible;
      s.runs = static_cast<int>(config.seeds.size());
      table.summaries.push_back(s);
    }
  }
  return table;
}

void WriteSweepCsv(std::ostream& out, const SweepTable& table) {
  const char* param = ToString(table.param);
  out << "sweep_param,value,mode,seed,min_ee,avg_se,outer_iters,feasible,status\n";
  for (const SweepRow& r : table.rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << param << ',' << FormatNumber(r.value) << ',' << ToString(r.mode) << ',' << r.seed << ','
        << FormatNumber(r.min_ee) << ',' << FormatNumber(r.avg_se) << ',' << r.outer_iterations << ','
        << (r.feasible ? 1 : 0) << ',' << status << '\n';
  }
  for (const SweepSummary& s : table.summaries) {
    out << param << ',' << FormatNumber(s.value) << ',' << ToString(s.mode) << ",mean,"
        << FormatNumber(s.mean_min_ee) << ',' << FormatNumber(s.mean_avg_se) << ','
        << FormatNumber(s.mean_outer_iterations) << ',' << s.feasible << ",summary of " << s.runs
        << " runs\n";
  }
}

std::vector<OracleCheckRow> RunOracleCheck(const ExperimentConfig& config) {
  config.Validate();
  std::vector<OracleCheckRow> rows;
  for (std::uint64_t seed : config.seeds) {
    const SystemInstance inst = config.Instance(seed);
    for (RisMode mode : config.modes) {
      OracleCheckRow row;
      row.seed = seed;
      row.mode = mode;
      const OracleResult o = OracleGridSearch(inst, config.oracle_grid, mode);
      AoConfig ao = config.ao;
      ao.mode = mode;
      row.report = AlternatingOptimize(inst, ao);
      row.ao_feasible = row.report.feasible && row.report.status != AoStatus::kInfeasible;
      row.ao_min_ee = row.report.min_ee;
      row.oracle_feasible = o.feasible;
      row.oracle_min_ee = o.min_ee;
      if (o.feasible) {
        const double again = MinUserEe(inst, o.phi, o.beamformers).value;
        row.oracle_recheck = o.min_ee > 0.0 ? std::abs(again - o.min_ee) / o.min_ee : std::abs(again);
        row.ratio = o.min_ee > 0.0 ? row.ao_min_ee / o.min_ee : std::nan("");
      } else {
        row.ratio = std::nan("");
      }
      if (row.ao_feasible) {
        const ProjectedPoint p =
            ProjectToGrid(inst, config.oracle_grid, row.report.phi, row.report.beamformers, mode);
        row.projected_min_ee = MinUserEe(inst, p.phi, p.beamformers).value;
      }
      if (!o.feasible && !row.ao_feasible) row.flag = "both_infeasible";
      else if (!o.feasible) row.flag = "oracle_infeasible";
      else if (!row.ao_feasible) row.flag = "ao_infeasible";
      else row.flag = "ok";
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void WriteOracleCsv(std::ostream& out, const std::vector<OracleCheckRow>& rows) {
  out << "seed,mode,ao_min_ee,oracle_min_ee,ratio,projected_min_ee,oracle_recheck,ao_feasible,"
         "oracle_feasible,flag\n";
  for (const OracleCheckRow& r : rows) {
    out << r.seed << ',' << ToString(r.mode) << ',' << FormatNumber(r.ao_min_ee) << ','
        << FormatNumber(r.oracle_min_ee) << ',' << FormatNumber(r.ratio) << ','
        << FormatNumber(r.projected_min_ee) << ',' << FormatNumber(r.oracle_recheck) << ','
        << (r.ao_feasible ? 1 : 0) << ',' << (r.oracle_feasible ? 1 : 0) << ',' << r.flag << '\n';
  }
}

}  // namespace starris

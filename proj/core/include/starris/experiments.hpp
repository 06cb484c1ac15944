#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "starris/ao_driver.hpp"
#include "starris/channel.hpp"
#include "starris/oracle.hpp"

namespace starris {

enum class SweepParam { kNone, kPmaxDbm, kRisElements, kStaticPowerDbm, kNoiseDbm };

const char* ToString(SweepParam p);
SweepParam ParseSweepParam(const std::string& text);

// Flat experiment description. Powers are in dBm here and converted to
// watts only when an instance is built.
struct ExperimentConfig {
  SystemDims dims{6, 4, 30};
  double pmax_dbm = 50.0;
  double static_power_dbm = 5.0;
  double noise_dbm = -20.0;
  double rate_threshold = 6.6;  // bit/s/Hz

  Vec3 bs_position{0.0, 0.0, 10.0};
  Vec3 ris_position{50.0, 0.0, 10.0};
  Vec3 ris_normal{-1.0, 0.0, 0.0};
  Vec3 user_center{50.0, 5.0, 1.5};
  double user_radius = 5.0;
  PathLossModel path_loss;

  std::vector<std::uint64_t> seeds{1};
  std::vector<RisMode> modes{RisMode::kStarEs};
  SweepParam sweep = SweepParam::kNone;
  std::vector<double> values;  // ignored when sweep is none

  AoConfig ao;
  GridSpec oracle_grid;

  // Throws ContractError on empty lists, repeated seeds or bad dimensions.
  void Validate() const;
  // Copy with the sweep parameter set to value.
  ExperimentConfig At(double value) const;
  SystemInstance Instance(std::uint64_t seed) const;
};

// key = value lines; '#' starts a comment. Keys:
//   users antennas elements pmax_dbm static_power_dbm noise_dbm rate_threshold
//   bs_position ris_position ris_normal user_center (x,y,z) user_radius
//   path_loss_exponent ref_loss_db
//   seeds (list, a..b ranges allowed) modes (list) sweep values (list)
//   ao_starts ao_start_seed ao_tolerance ao_max_iterations
//   oracle_phase_points oracle_beta_step oracle_power_points
//   oracle_directions (matched_filter | sphere) oracle_sphere_points
// Lists are comma separated. Unknown or repeated keys are errors.
ExperimentConfig ParseConfig(std::istream& in);
ExperimentConfig LoadConfig(const std::string& path);
// Writes every key, so ParseConfig(WriteConfig(c)) reproduces c.
void WriteConfig(std::ostream& out, const ExperimentConfig& config);

struct SweepRow {
  double value = 0.0;
  RisMode mode = RisMode::kStarEs;
  std::uint64_t seed = 0;
  double min_ee = 0.0;
  double avg_se = 0.0;
  int outer_iterations = 0;
  bool feasible = false;
  std::string status;  // AO status, or "error: ..." when the run threw
};

struct SweepSummary {
  double value = 0.0;
  RisMode mode = RisMode::kStarEs;
  double mean_min_ee = 0.0;
  double mean_avg_se = 0.0;
  double mean_outer_iterations = 0.0;
  int feasible = 0;
  int runs = 0;
};

struct SweepTable {
  SweepParam param = SweepParam::kNone;
  std::vector<SweepRow> rows;           // (value, mode, seed) order
  std::vector<SweepSummary> summaries;  // (value, mode) order
  std::vector<SolveReport> reports;     // parallel to rows; empty report on error
};

// One AO run per (value, mode, seed). Channels depend only on the seed and
// the dimensions. A run that throws is recorded and the sweep continues.
SweepTable RunSweep(const ExperimentConfig& config);

// Header sweep_param,value,mode,seed,min_ee,avg_se,outer_iters,feasible,status.
// Data rows first, then summary rows with seed "mean" and feasible as a
// count of feasible seeds. Numbers use 9 significant digits.
void WriteSweepCsv(std::ostream& out, const SweepTable& table);

struct OracleCheckRow {
  std::uint64_t seed = 0;
  RisMode mode = RisMode::kStarEs;
  double ao_min_ee = 0.0;
  double oracle_min_ee = 0.0;
  double ratio = 0.0;            // NaN when the oracle found nothing
  double projected_min_ee = 0.0; // AO point rounded onto the oracle grid
  double oracle_recheck = 0.0;   // relative error of the oracle value re-evaluated
  bool ao_feasible = false;
  bool oracle_feasible = false;
  std::string flag;              // ok | oracle_infeasible | both_infeasible | ao_infeasible
  SolveReport report;
};

std::vector<OracleCheckRow> RunOracleCheck(const ExperimentConfig& config);

// Header seed,mode,ao_min_ee,oracle_min_ee,ratio,projected_min_ee,
// oracle_recheck,ao_feasible,oracle_feasible,flag.
void WriteOracleCsv(std::ostream& out, const std::vector<OracleCheckRow>& rows);

// Fixed 9-significant-digit formatting used by every CSV writer.
std::string FormatNumber(double x);

}  // namespace starris

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "starris/beamforming.hpp"
#include "starris/phase_shift.hpp"
#include "starris/system_model.hpp"
#include "starris/trace.hpp"

namespace starris {

struct AoConfig {
  RisMode mode = RisMode::kStarEs;
  double tolerance = 1e-3;  // relative change of min-EE between outer iterations
  int max_iterations = 20;
  BeamformingOptions beamforming;
  RelaxationOptions relaxation;
  // First start; defaults are InitialCoefficients and MRT at p_max / K.
  std::optional<StarCoefficients> initial_phi;
  std::optional<BeamformerSet> initial_beams;
  // The problem is not jointly convex and the outcome depends on the start.
  // Extra starts draw random coefficients (MRT beams) from start_seed; the
  // best feasible report wins, earliest start on ties.
  int starts = 4;
  std::uint64_t start_seed = 0;

  void Validate() const;
};

enum class AoStatus { kConverged, kIterationLimit, kInfeasible };

const char* ToString(AoStatus status);

struct SolveReport {
  RisMode mode = RisMode::kStarEs;
  AoStatus status = AoStatus::kInfeasible;
  double min_ee = 0.0;
  int min_user = 0;
  double avg_se = 0.0;  // mean rate over users
  std::vector<double> rates;
  std::vector<double> powers;
  std::vector<double> ees;
  StarCoefficients phi;
  BeamformerSet beamformers;
  bool budget_ok = false;
  bool qos_ok = false;
  bool feasible = false;           // budget and QoS
  bool rank_one_failure = false;   // some phase stage ended without reaching rank one
  bool randomized_beams = false;   // some beamforming stage needed randomization
  bool degenerate_baseline = false;
  int outer_iterations = 0;
  int start = 0;                   // start that produced this report
  int starts_run = 0;
  std::vector<double> history;     // min-EE at the start and after each outer iteration
  ConvergenceTrace trace;
  double wall_seconds = 0.0;
  std::string message;
};

// Baseline panel: the first ceil(N/2) elements serve one side at full
// amplitude, the rest serve the other.
struct BaselineView {
  ElementLayout layout;
  StarCoefficients initial;
  bool degenerate = false;  // a side has no users, or users have no serving element
  std::string reason;
};

// Throws ContractError for RisMode::kStarEs.
BaselineView ApplyBaselineMode(const SystemInstance& instance, RisMode mode);

// Starting coefficients for a mode: beta = 0.5 everywhere for ES, the
// baseline split otherwise; zero phases.
StarCoefficients InitialCoefficients(int num_elements, RisMode mode);

// Alternates Dinkelbach beamforming and sequential phase relaxation until
// min-EE settles. A stage result is kept only if it does not lose QoS or
// min-EE, so the history never decreases. History, trace and iteration count
// belong to the winning start; wall time covers all starts.
SolveReport AlternatingOptimize(const SystemInstance& instance, const AoConfig& config = {});

// Fills the metric fields of a report from its stored decision variables.
void EvaluateReport(const SystemInstance& instance, SolveReport& report);

}  // namespace starris

#pragma once

#include <cstdint>

#include "starris/phase_shift.hpp"
#include "starris/system_model.hpp"

namespace starris {

enum class BeamDirections {
  kMatchedFilter,  // v_k along h_k^H for the candidate coefficients
  kSphere,         // discretized unit sphere, M <= 2 only
};

struct GridSpec {
  int phase_points = 16;    // per 2 pi
  double beta_step = 0.05;  // 1 / beta_step must be an integer
  int power_points = 200;   // i * p_max / (power_points - 1), i = 0 .. power_points - 1
  BeamDirections directions = BeamDirections::kMatchedFilter;
  int sphere_points = 8;    // polar steps on [0, pi/2] for kSphere

  void Validate() const;
  int BetaLevels() const;   // 1 / beta_step + 1
  // Same grid at twice the resolution; every old point stays on it.
  GridSpec Refined() const;
};

struct GridCounts {
  std::uint64_t coefficients = 0;  // configurations of (beta, theta)
  std::uint64_t powers = 0;        // power allocations with sum <= p_max
  std::uint64_t directions = 1;    // beam direction tuples
};

// Counts for an instance; each must stay <= kOracleGuard.
GridCounts CountGrid(const SystemInstance& instance, const GridSpec& grid,
                     RisMode mode = RisMode::kStarEs);

inline constexpr std::uint64_t kOracleGuard = 100'000'000ULL;

struct OracleResult {
  bool feasible = false;  // false: no grid point meets the rate threshold
  double min_ee = 0.0;
  StarCoefficients phi;
  BeamformerSet beamformers;
  std::uint64_t evaluated = 0;
};

// Exhaustive search over the grid. The first element's phase on each side is
// held at zero (a common phase does not change any rate). QoS-violating
// points are skipped. Ties keep the earliest grid point. Throws ContractError
// when a grid count exceeds the guard.
OracleResult OracleGridSearch(const SystemInstance& instance, const GridSpec& grid,
                              RisMode mode = RisMode::kStarEs);

// Rounds a configuration to the nearest grid point: phases relative to the
// first element, betas to the step, powers down to the lattice. Directions
// are kept. Used to compare continuous solutions with the grid.
struct ProjectedPoint {
  StarCoefficients phi;
  BeamformerSet beamformers;
};
ProjectedPoint ProjectToGrid(const SystemInstance& instance, const GridSpec& grid,
                             const StarCoefficients& phi, const BeamformerSet& beamformers,
                             RisMode mode = RisMode::kStarEs);

}  // namespace starris

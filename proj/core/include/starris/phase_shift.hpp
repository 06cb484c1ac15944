#pragma once

#include <array>
#include <vector>

#include "starris/concave_log.hpp"
#include "starris/conic.hpp"
#include "starris/system_model.hpp"
#include "starris/trace.hpp"

namespace starris {

enum class RisMode { kStarEs, kReflectOnly, kTransmitOnly };

const char* ToString(RisMode mode);
RisMode ParseRisMode(const std::string& text);

// Which elements serve each side. Under ES every element serves both sides
// with beta_t + beta_r = 1; the baselines split the panel into a reflecting
// part and a transmitting part with unit amplitude.
struct ElementLayout {
  RisMode mode = RisMode::kStarEs;
  std::array<std::vector<int>, 2> elements;  // indexed by SideIndex

  bool coupled() const { return mode == RisMode::kStarEs; }
};

inline int SideIndex(UserSide side) { return side == UserSide::kTransmission ? 0 : 1; }

ElementLayout MakeLayout(RisMode mode, int num_elements);

// b[k][j] = diag(g_k) H v_j, so h_k v_j = phi_c^T b[k][j] with phi_c the
// diagonal of Phi_c. B[k][j] = conj(b) b^T, so that with the lifted
// Phi_c = phi_c phi_c^H we get tr(Phi_c B[k][j]) = |h_k v_j|^2.
struct PassiveData {
  std::vector<std::vector<CVector>> b;
  std::vector<std::vector<CMatrix>> B;
};

PassiveData ComputePassiveData(const SystemInstance& instance, const BeamformerSet& beamformers);

// Full N x N lifted matrices; rows/columns of elements that do not serve a
// side stay zero.
struct LiftedPhases {
  CMatrix Phi_t;
  CMatrix Phi_r;

  const CMatrix& Side(int c) const { return c == 0 ? Phi_t : Phi_r; }
  CMatrix& Side(int c) { return c == 0 ? Phi_t : Phi_r; }
  static LiftedPhases FromCoefficients(const StarCoefficients& phi);
};

// Largest eigenvalue over trace. Zero-trace matrices count as rank one.
double PrincipalRatio(const CMatrix& Phi);
CVector PrincipalEigenvector(const CMatrix& Phi);

// min(1, xi_max / tr + delta); throws on zero trace.
double UpdateEpsilon(const CMatrix& Phi, double delta);

struct PhaseSdp {
  ConicProblem problem;
  std::array<BlockId, 2> block;
  std::array<bool, 2> has_block{false, false};
  ScalarId mu;
  std::vector<LogHypograph> rate;
  ElementLayout layout;
};

// epsilon[c] = 0 drops the eigen-surrogate for side c. anchors[c] are unit
// vectors over the side's elements (full length N, other entries ignored).
PhaseSdp BuildPhaseSdp(const SystemInstance& instance, const BeamformerSet& beamformers,
                       const PassiveData& passive, double lambda, const std::array<double, 2>& epsilon,
                       const std::array<CVector, 2>& anchors, const LiftedPhases& Phi_prev,
                       const ElementLayout& layout, const std::vector<LogCuts>& cuts);

LogCuts DefaultPhaseCuts(const SystemInstance& instance, const PassiveData& passive, int k,
                         int base_tangents = 32);

LiftedPhases ReadPhaseSolution(const PhaseSdp& sdp, const ConicSolution& solution, int num_elements);

struct RelaxationOptions {
  double delta0 = 0.1;
  double delta_tol = 1e-2;
  int max_iterations = 50;    // tau_max
  double objective_tol = 1e-4;
  int base_tangents = 32;
  double cut_gap_tol = 1e-7;
  int max_cut_rounds = 6;
  SolverOptions solver;
};

struct RelaxationResult {
  LiftedPhases Phi;                  // last accepted iterate
  StarCoefficients coefficients;     // best extracted iterate, the start included
  double min_ee = 0.0;               // of `coefficients` with the fixed beamformers
  bool qos_ok = false;
  std::array<double, 2> epsilon{0.0, 0.0};
  std::array<double, 2> ratio{1.0, 1.0};
  bool converged = false;
  bool rank_one_failure = false;
  int iterations = 0;
  int solves = 0;
  ConvergenceTrace trace;
};

// Sequential rank-one constraint relaxation. The first solve runs with the
// eigen-surrogate dropped (epsilon = 0).
RelaxationResult SequentialRelaxation(const SystemInstance& instance,
                                      const BeamformerSet& beamformers, double lambda,
                                      const StarCoefficients& phi_init, const ElementLayout& layout,
                                      const RelaxationOptions& options = {});

// Phases from the principal eigenvector (first serving element at zero
// phase), amplitudes from the diagonals, renormalized so beta_t + beta_r = 1.
// Throws ContractError if either side is further than 2e-2 from rank one.
StarCoefficients ExtractStarCoefficients(const LiftedPhases& Phi, const ElementLayout& layout);
// Same without the rank precondition.
StarCoefficients ExtractStarCoefficientsUnchecked(const LiftedPhases& Phi, const ElementLayout& layout);

}  // namespace starris

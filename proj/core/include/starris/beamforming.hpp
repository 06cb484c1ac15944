#pragma once

#include <cstdint>
#include <vector>

#include "starris/concave_log.hpp"
#include "starris/conic.hpp"
#include "starris/system_model.hpp"
#include "starris/trace.hpp"

namespace starris {

// V_k = v_k v_k^H during solves, in watts.
struct LiftedBeamformers {
  std::vector<CMatrix> V;

  double TotalPower() const;
  static LiftedBeamformers FromVectors(const BeamformerSet& beamformers);
};

struct BeamformingOptions {
  double epsilon_tol = 1e-3;   // |F(lambda)| stopping tolerance
  int max_iterations = 30;
  double initial_lambda = 0.0;
  double sca_tol = 1e-4;       // change of the true constraint values between rounds
  int max_sca_rounds = 20;
  int base_tangents = 32;
  double cut_gap_tol = 1e-8;   // bits; refine cuts until t - log2(s) is below this
  int max_cut_rounds = 12;
  double rank_one_threshold = 0.99;
  int num_randomizations = 100;
  std::uint64_t randomization_seed = 0x5eedULL;
  SolverOptions solver;
};

// Gram matrices H_k = h_k^H h_k of the effective channels.
std::vector<CMatrix> ChannelGrams(const SystemInstance& instance, const StarCoefficients& phi);

// Rates and EEs evaluated on lifted variables (equal to the vector forms for
// rank-one V).
struct LiftedMetrics {
  std::vector<double> rates;
  std::vector<double> powers;
  double min_ee = 0.0;
  // min_k (R_k - lambda P_k) for the lambda passed in.
  double f_value = 0.0;
};

LiftedMetrics EvaluateLifted(const SystemInstance& instance, const std::vector<CMatrix>& grams,
                             const LiftedBeamformers& V, double lambda = 0.0);

// Default tangent set for one user's log2(noise-normalized total power).
LogCuts DefaultBeamformingCuts(const SystemInstance& instance, const std::vector<CMatrix>& grams,
                               int base_tangents = 32);

// Variables are W_k = V_k / p_max so that the budget row reads sum tr W_k <= 1.
struct BeamformingSdp {
  ConicProblem problem;
  std::vector<BlockId> W;
  ScalarId mu;
  std::vector<LogHypograph> rate;
  std::vector<InterferenceLinearization> lin;
  double scale = 1.0;  // V = scale * W
};

BeamformingSdp BuildBeamformingSdp(double lambda, const StarCoefficients& phi,
                                   const SystemInstance& instance, const LiftedBeamformers& V_prev,
                                   const std::vector<LogCuts>& cuts);
BeamformingSdp BuildBeamformingSdp(double lambda, const StarCoefficients& phi,
                                   const SystemInstance& instance,
                                   const LiftedBeamformers& V_prev);

enum class BeamformingStatus { kConverged, kIterationLimit, kQosInfeasible, kSolverFailure };

const char* ToString(BeamformingStatus status);

struct DinkelbachResult {
  BeamformingStatus status = BeamformingStatus::kSolverFailure;
  LiftedBeamformers V;
  double lambda = 0.0;   // min-EE of V
  double mu = 0.0;       // epigraph value of the last accepted solve
  double f_value = 0.0;  // F at the last iteration
  int iterations = 0;
  int solves = 0;
  // Smallest true rate-constraint slack over every accepted SDP solution.
  double min_sca_slack = 0.0;
  std::vector<double> lambdas;  // lambda^(1), lambda^(2), ...
  ConvergenceTrace trace;
};

// V_k = (p_max / K) * hhat_k hhat_k^H with hhat_k the normalized conjugate of h_k.
LiftedBeamformers MrtInitialization(const SystemInstance& instance, const StarCoefficients& phi);

DinkelbachResult DinkelbachBeamforming(const SystemInstance& instance, const StarCoefficients& phi,
                                       const LiftedBeamformers& V_init,
                                       const BeamformingOptions& options = {});

struct ExtractionResult {
  BeamformerSet beamformers;
  bool feasible = false;  // budget and QoS both hold
  bool rank_one = false;  // principal eigenvectors used directly
  double min_ee = 0.0;
};

ExtractionResult ExtractBeamformers(const LiftedBeamformers& V, const SystemInstance& instance,
                                    const StarCoefficients& phi,
                                    const BeamformingOptions& options = {});

}  // namespace starris

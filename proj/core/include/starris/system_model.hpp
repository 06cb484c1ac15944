#pragma once

#include <optional>
#include <vector>

#include "starris/types.hpp"

namespace starris {

struct SystemDims {
  int num_users = 1;         // K
  int num_bs_antennas = 1;   // M
  int num_ris_elements = 1;  // N

  void Validate() const;
  friend bool operator==(const SystemDims&, const SystemDims&) = default;
};

// Component-level power terms that the aggregate model folds into a single
// static constant. Carried for reporting only; no computation reads it.
struct PowerBreakdown {
  double amplifier_inefficiency = 1.0;  // alpha = 1 / amplifier efficiency
  std::vector<double> user_hardware_watts;
  double bs_static_watts = 0.0;
  double ris_static_watts = 0.0;
};

struct PowerModel {
  double p_max_watts = 100.0;
  double static_power_watts = 3.1622776601683795e-3;
  double noise_power_watts = 1e-5;
  // Minimum per-user spectral efficiency in bit/s/Hz.
  double qos_rate_threshold = 0.0;
  std::optional<PowerBreakdown> breakdown;

  void Validate() const;
  // SINR threshold equivalent to the rate threshold, 2^R - 1.
  double SinrThreshold() const;
};

enum class UserSide { kTransmission, kReflection };

const char* ToString(UserSide side);

// Energy-splitting STAR-RIS configuration. beta_* are amplitude-squared
// splits, theta_* phases in radians.
struct StarCoefficients {
  RVector beta_t;
  RVector beta_r;
  RVector theta_t;
  RVector theta_r;

  // beta = 0.5 in both modes, zero phases.
  static StarCoefficients Uniform(int num_elements);

  int size() const { return static_cast<int>(beta_t.size()); }
  void Validate() const;
  // Diagonal of Phi_c: sqrt(beta_n^c) * exp(j theta_n^c).
  CVector Diagonal(UserSide side) const;
};

// Wraps an angle into [0, 2*pi).
double WrapPhase(double radians);

struct BeamformerSet {
  std::vector<CVector> v;

  int size() const { return static_cast<int>(v.size()); }
  double TotalPower() const;
};

struct ChannelSet {
  CMatrix H;                     // N x M, BS -> RIS
  std::vector<CRowVector> g;     // K rows of length N, RIS -> user k
  std::vector<UserSide> sides;   // per user

  SystemDims Dims() const;
  void Validate(const SystemDims& dims) const;
};

struct SystemInstance {
  SystemDims dims;
  PowerModel power;
  ChannelSet channels;

  void Validate() const;
};

double DbmToWatt(double dbm);
double WattToDbm(double watts);

// h_k = g_k * diag(phi_c) * H for the user's side c.
CRowVector EffectiveChannel(const CRowVector& g, const StarCoefficients& phi,
                            UserSide side, const CMatrix& H);

std::vector<CRowVector> EffectiveChannels(const SystemInstance& instance,
                                          const StarCoefficients& phi);

double UserRate(const SystemInstance& instance, const StarCoefficients& phi,
                const BeamformerSet& beamformers, int k);

double UserPower(const CVector& v, double static_power_watts);

double UserEe(const SystemInstance& instance, const StarCoefficients& phi,
              const BeamformerSet& beamformers, int k);

struct MinEe {
  int user = 0;
  double value = 0.0;
};

// Lowest index wins ties.
MinEe MinUserEe(const SystemInstance& instance, const StarCoefficients& phi,
                const BeamformerSet& beamformers);

// Per-user evaluation bundle used by reports and feasibility checks.
struct UserMetrics {
  std::vector<double> rates;
  std::vector<double> powers;
  std::vector<double> ees;
  MinEe min_ee;
  double total_power = 0.0;
  bool budget_ok = false;
  bool qos_ok = false;
};

UserMetrics EvaluateUsers(const SystemInstance& instance,
                          const StarCoefficients& phi,
                          const BeamformerSet& beamformers,
                          double tolerance = 1e-6);

}  // namespace starris

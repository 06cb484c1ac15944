#include "starris/system_model.hpp"

#include <cmath>
#include <string>

namespace starris {

void SystemDims::Validate() const {
  if (num_users < 1 || num_bs_antennas < 1 || num_ris_elements < 1) {
    throw ContractError("SystemDims: K, M and N must all be >= 1");
  }
}

void PowerModel::Validate() const {
  if (!(p_max_watts > 0.0) || !(static_power_watts > 0.0) || !(noise_power_watts > 0.0)) {
    throw ContractError("PowerModel: all powers must be > 0");
  }
  if (!(qos_rate_threshold >= 0.0) || !std::isfinite(qos_rate_threshold)) {
    throw ContractError("PowerModel: QoS rate threshold must be finite and >= 0");
  }
}

double PowerModel::SinrThreshold() const { return std::exp2(qos_rate_threshold) - 1.0; }

const char* ToString(UserSide side) {
  return side == UserSide::kTransmission ? "t" : "r";
}

double WrapPhase(double radians) {
  double wrapped = std::fmod(radians, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

StarCoefficients StarCoefficients::Uniform(int num_elements) {
  StarCoefficients c;
  c.beta_t = RVector::Constant(num_elements, 0.5);
  c.beta_r = RVector::Constant(num_elements, 0.5);
  c.theta_t = RVector::Zero(num_elements);
  c.theta_r = RVector::Zero(num_elements);
  return c;
}

void StarCoefficients::Validate() const {
  const auto n = beta_t.size();
  if (beta_r.size() != n || theta_t.size() != n || theta_r.size() != n) {
    throw ContractError("StarCoefficients: per-element vectors differ in length");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (beta_t[i] < 0.0 || beta_t[i] > 1.0 || beta_r[i] < 0.0 || beta_r[i] > 1.0) {
      throw ContractError("StarCoefficients: beta outside [0, 1] at element " + std::to_string(i));
    }
    if (std::abs(beta_t[i] + beta_r[i] - 1.0) > 1e-9) {
      throw ContractError("StarCoefficients: beta_t + beta_r != 1 at element " + std::to_string(i));
    }
    for (double theta : {theta_t[i], theta_r[i]}) {
      if (!(theta >= 0.0 && theta < kTwoPi)) {
        throw ContractError("StarCoefficients: phase outside [0, 2pi) at element " +
                            std::to_string(i));
      }
    }
  }
}

CVector StarCoefficients::Diagonal(UserSide side) const {
  const RVector& beta = side == UserSide::kTransmission ? beta_t : beta_r;
  const RVector& theta = side == UserSide::kTransmission ? theta_t : theta_r;
  CVector d(beta.size());
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    d[i] = std::polar(std::sqrt(beta[i]), theta[i]);
  }
  return d;
}

double BeamformerSet::TotalPower() const {
  double total = 0.0;
  for (const auto& vk : v) total += vk.squaredNorm();
  return total;
}

SystemDims ChannelSet::Dims() const {
  return SystemDims{static_cast<int>(g.size()), static_cast<int>(H.cols()),
                    static_cast<int>(H.rows())};
}

void ChannelSet::Validate(const SystemDims& dims) const {
  dims.Validate();
  if (H.rows() != dims.num_ris_elements || H.cols() != dims.num_bs_antennas) {
    throw ContractError("ChannelSet: H must be N x M");
  }
  if (static_cast<int>(g.size()) != dims.num_users ||
      static_cast<int>(sides.size()) != dims.num_users) {
    throw ContractError("ChannelSet: need one g row and one side label per user");
  }
  for (const auto& gk : g) {
    if (gk.size() != dims.num_ris_elements) {
      throw ContractError("ChannelSet: g_k must have N entries");
    }
    if (!gk.allFinite()) throw ContractError("ChannelSet: non-finite g entry");
  }
  if (!H.allFinite()) throw ContractError("ChannelSet: non-finite H entry");
}

void SystemInstance::Validate() const {
  dims.Validate();
  power.Validate();
  channels.Validate(dims);
}

double DbmToWatt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double WattToDbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

CRowVector EffectiveChannel(const CRowVector& g, const StarCoefficients& phi, UserSide side,
                            const CMatrix& H) {
  if (g.size() != H.rows() || phi.size() != H.rows()) {
    throw ContractError("EffectiveChannel: g, phi and H disagree on N");
  }
  const CVector d = phi.Diagonal(side);
  return (g.array() * d.transpose().array()).matrix() * H;
}

std::vector<CRowVector> EffectiveChannels(const SystemInstance& instance,
                                          const StarCoefficients& phi) {
  const auto& ch = instance.channels;
  std::vector<CRowVector> h;
  h.reserve(ch.g.size());
  for (std::size_t k = 0; k < ch.g.size(); ++k) {
    h.push_back(EffectiveChannel(ch.g[k], phi, ch.sides[k], ch.H));
  }
  return h;
}

namespace {

double RateFromChannel(const CRowVector& hk, const BeamformerSet& bf, int k, double noise) {
  const double signal = std::norm((hk * bf.v[k]).value());
  double interference = 0.0;
  for (int j = 0; j < bf.size(); ++j) {
    if (j != k) interference += std::norm((hk * bf.v[j]).value());
  }
  return std::log2(1.0 + signal / (interference + noise));
}

}  // namespace

double UserRate(const SystemInstance& instance, const StarCoefficients& phi,
                const BeamformerSet& beamformers, int k) {
  const auto& ch = instance.channels;
  const CRowVector hk = EffectiveChannel(ch.g.at(k), phi, ch.sides.at(k), ch.H);
  return RateFromChannel(hk, beamformers, k, instance.power.noise_power_watts);
}

double UserPower(const CVector& v, double static_power_watts) {
  return v.squaredNorm() + static_power_watts;
}

double UserEe(const SystemInstance& instance, const StarCoefficients& phi,
              const BeamformerSet& beamformers, int k) {
  return UserRate(instance, phi, beamformers, k) /
         UserPower(beamformers.v.at(k), instance.power.static_power_watts);
}

MinEe MinUserEe(const SystemInstance& instance, const StarCoefficients& phi,
                const BeamformerSet& beamformers) {
  return EvaluateUsers(instance, phi, beamformers).min_ee;
}

UserMetrics EvaluateUsers(const SystemInstance& instance, const StarCoefficients& phi,
                          const BeamformerSet& beamformers, double tolerance) {
  const int K = instance.dims.num_users;
  if (beamformers.size() != K) throw ContractError("EvaluateUsers: need one beamformer per user");
  const auto h = EffectiveChannels(instance, phi);
  UserMetrics m;
  m.rates.resize(K);
  m.powers.resize(K);
  m.ees.resize(K);
  m.qos_ok = true;
  for (int k = 0; k < K; ++k) {
    m.rates[k] = RateFromChannel(h[k], beamformers, k, instance.power.noise_power_watts);
    m.powers[k] = UserPower(beamformers.v[k], instance.power.static_power_watts);
    m.ees[k] = m.rates[k] / m.powers[k];
    if (k == 0 || m.ees[k] < m.min_ee.value) m.min_ee = MinEe{k, m.ees[k]};
    const double R = instance.power.qos_rate_threshold;
    if (m.rates[k] < R - tolerance * std::max(1.0, R)) m.qos_ok = false;
  }
  m.total_power = beamformers.TotalPower();
  m.budget_ok = m.total_power <= instance.power.p_max_watts * (1.0 + tolerance);
  return m;
}

}  // namespace starris

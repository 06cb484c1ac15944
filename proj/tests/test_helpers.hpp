#pragma once

#include <cstdint>

#include "starris/channel.hpp"
#include "starris/system_model.hpp"
#include "starris/types.hpp"

namespace starris::testing {

inline CMatrix RandomComplex(GaussianStream& rng, int rows, int cols) {
  CMatrix A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = rng.NextComplex(1.0);
  return A;
}

inline CMatrix RandomHermitian(GaussianStream& rng, int n) {
  const CMatrix A = RandomComplex(rng, n, n);
  return 0.5 * (A + A.adjoint());
}

inline RMatrix RandomSymmetric(GaussianStream& rng, int n) {
  RMatrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.Next();
  return 0.5 * (A + A.transpose());
}

inline StarCoefficients RandomPhi(GaussianStream& rng, int n) {
  StarCoefficients phi = StarCoefficients::Uniform(n);
  for (int i = 0; i < n; ++i) {
    phi.beta_t[i] = rng.Uniform();
    phi.beta_r[i] = 1.0 - phi.beta_t[i];
    phi.theta_t[i] = kTwoPi * (1.0 - rng.Uniform());
    phi.theta_r[i] = kTwoPi * (1.0 - rng.Uniform());
  }
  return phi;
}

// Unit-scale instance with alternating sides.
inline SystemInstance RandomInstance(GaussianStream& rng, int K, int M, int N) {
  SystemInstance inst;
  inst.dims = {K, M, N};
  inst.power.noise_power_watts = 0.5;
  inst.power.static_power_watts = 0.25;
  inst.power.p_max_watts = 10.0;
  inst.channels.H = RandomComplex(rng, N, M);
  for (int k = 0; k < K; ++k) {
    inst.channels.g.push_back(RandomComplex(rng, 1, N).row(0));
    inst.channels.sides.push_back(k % 2 ? UserSide::kReflection : UserSide::kTransmission);
  }
  return inst;
}

inline BeamformerSet RandomBeams(GaussianStream& rng, int K, int M) {
  BeamformerSet bf;
  for (int k = 0; k < K; ++k) bf.v.push_back(RandomComplex(rng, M, 1).col(0));
  return bf;
}

}  // namespace starris::testing

#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "starris/beamforming.hpp"
#include "test_helpers.hpp"

using namespace starris;
using starris::testing::RandomComplex;
using starris::testing::RandomInstance;
using starris::testing::RandomPhi;

namespace {

bool HasLabel(const ConicProblem& p, const std::string& label) {
  for (const auto& c : p.constraints())
    if (c.label == label) return true;
  return false;
}

// One transmitting panel with unit amplitudes: h_k = g_k H.
SystemInstance DirectInstance(CMatrix H, std::vector<CRowVector> g, double noise, double p_static,
                              double p_max, double rate = 0.0) {
  SystemInstance inst;
  inst.dims = {static_cast<int>(g.size()), static_cast<int>(H.cols()), static_cast<int>(H.rows())};
  inst.channels = FixedInstance(std::move(H), std::move(g),
                                std::vector<UserSide>(inst.dims.num_users, UserSide::kTransmission));
  inst.power.noise_power_watts = noise;
  inst.power.static_power_watts = p_static;
  inst.power.p_max_watts = p_max;
  inst.power.qos_rate_threshold = rate;
  return inst;
}

StarCoefficients FullTransmission(int n) {
  StarCoefficients phi = StarCoefficients::Uniform(n);
  phi.beta_t.setOnes();
  phi.beta_r.setZero();
  return phi;
}

}  // namespace

TEST_CASE("sdp rows for a single user") {
  const SystemInstance inst = DirectInstance(CMatrix::Constant(1, 1, 1.0),
                                             {CRowVector::Constant(1, 2.0)}, 1.0, 0.5, 4.0, 1.0);
  const StarCoefficients phi = FullTransmission(1);
  const BeamformingSdp sdp = BuildBeamformingSdp(0.3, phi, inst, MrtInitialization(inst, phi));
  CHECK(sdp.W.size() == 1);
  CHECK(HasLabel(sdp.problem, "ee_0"));
  CHECK(HasLabel(sdp.problem, "qos_0"));
  CHECK(HasLabel(sdp.problem, "budget"));
  // No interference: the linearization is the constant log2(noise).
  CHECK(sdp.lin[0].x0 == doctest::Approx(1.0));
  CHECK(sdp.lin[0].coeffs[0].norm() == 0.0);

  SystemInstance no_qos = inst;
  no_qos.power.qos_rate_threshold = 0.0;
  const BeamformingSdp free = BuildBeamformingSdp(0.0, phi, no_qos, MrtInitialization(no_qos, phi));
  CHECK_FALSE(HasLabel(free.problem, "qos_0"));
}

TEST_CASE("mrt initialization") {
  GaussianStream rng(3);
  const SystemInstance inst = RandomInstance(rng, 3, 2, 4);
  const StarCoefficients phi = RandomPhi(rng, 4);
  const LiftedBeamformers V = MrtInitialization(inst, phi);
  CHECK(V.TotalPower() == doctest::Approx(inst.power.p_max_watts));
  const std::vector<CRowVector> h = EffectiveChannels(inst, phi);
  for (int k = 0; k < 3; ++k) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(V.V[k]);
    CHECK(eig.eigenvalues()[0] == doctest::Approx(0.0).epsilon(1e-12));
    // h V h^H = p ||h||^2 for V = p hhat hhat^H
    const double gain = (h[k] * V.V[k] * h[k].adjoint()).value().real();
    CHECK(gain == doctest::Approx(inst.power.p_max_watts / 3.0 * h[k].squaredNorm()));
  }
}

TEST_CASE("scalar channel: lambda matches a 1-D power scan") {
  for (double g : {0.5, 3.0, 20.0}) {
    const SystemInstance inst = DirectInstance(CMatrix::Constant(1, 1, 1.0),
                                               {CRowVector::Constant(1, std::sqrt(g))}, 0.1, 0.2, 5.0);
    const StarCoefficients phi = FullTransmission(1);
    const DinkelbachResult d = DinkelbachBeamforming(inst, phi, MrtInitialization(inst, phi));
    REQUIRE(d.status == BeamformingStatus::kConverged);
    double best = 0.0;
    for (int i = 0; i <= 10000; ++i) {
      const double p = 5.0 * i / 10000.0;
      best = std::max(best, std::log2(1.0 + g * p / 0.1) / (p + 0.2));
    }
    CHECK(d.lambda == doctest::Approx(best).epsilon(1e-2));
    CHECK(std::abs(d.f_value) <= 1e-3);
  }
}

TEST_CASE("orthogonal users: matches a grid over diagonal beams") {
  // h_1 = (a, 0), h_2 = (0, b); the optimum is diagonal and the budget binds.
  const double a2 = 10.0, b2 = 3.0, noise = 1.0, p_static = 1.0, p_max = 2.0;
  CRowVector g1(2), g2(2);
  g1 << std::sqrt(a2), 0.0;
  g2 << 0.0, std::sqrt(b2);
  const SystemInstance inst = DirectInstance(CMatrix::Identity(2, 2), {g1, g2}, noise, p_static, p_max);
  const StarCoefficients phi = FullTransmission(2);
  const DinkelbachResult d = DinkelbachBeamforming(inst, phi, MrtInitialization(inst, phi));
  REQUIRE(d.status == BeamformingStatus::kConverged);

  double best = 0.0;
  const int n = 400;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const double p1 = p_max * i / n, p2 = p_max * j / n;
      const double e1 = std::log2(1.0 + a2 * p1 / noise) / (p1 + p_static);
      const double e2 = std::log2(1.0 + b2 * p2 / noise) / (p2 + p_static);
      best = std::max(best, std::min(e1, e2));
    }
  }
  CHECK(d.lambda == doctest::Approx(best).epsilon(2e-2));
  CHECK(d.V.TotalPower() <= p_max * (1.0 + 1e-6));
}

TEST_CASE("starting at the optimum takes one iteration") {
  GaussianStream rng(17);
  const SystemInstance inst = RandomInstance(rng, 2, 2, 3);
  const StarCoefficients phi = RandomPhi(rng, 3);
  const DinkelbachResult first = DinkelbachBeamforming(inst, phi, MrtInitialization(inst, phi));
  REQUIRE(first.status == BeamformingStatus::kConverged);
  BeamformingOptions opt;
  opt.initial_lambda = first.lambda;
  const DinkelbachResult again = DinkelbachBeamforming(inst, phi, first.V, opt);
  CHECK(again.status == BeamformingStatus::kConverged);
  CHECK(again.iterations == 1);
  CHECK(std::abs(again.f_value) <= 1e-3);
}

TEST_CASE("lambda never decreases and the true rate rows hold") {
  GaussianStream rng(23);
  for (int trial = 0; trial < 3; ++trial) {
    const SystemInstance inst = RandomInstance(rng, 3, 2, 4);
    const StarCoefficients phi = RandomPhi(rng, 4);
    const DinkelbachResult d = DinkelbachBeamforming(inst, phi, MrtInitialization(inst, phi));
    REQUIRE(d.status == BeamformingStatus::kConverged);
    for (std::size_t i = 1; i < d.lambdas.size(); ++i) CHECK(d.lambdas[i] >= d.lambdas[i - 1] - 1e-9);
    CHECK(d.min_sca_slack >= -1e-6);
    CHECK(d.iterations <= 30);

    // F at fixed V falls as lambda grows.
    const std::vector<CMatrix> grams = ChannelGrams(inst, phi);
    const double f0 = EvaluateLifted(inst, grams, d.V, d.lambda).f_value;
    const double f1 = EvaluateLifted(inst, grams, d.V, d.lambda + 0.1).f_value;
    CHECK(f1 < f0);

    // Extraction closes budget and QoS and cannot beat the relaxation.
    const ExtractionResult ex = ExtractBeamformers(d.V, inst, phi);
    CHECK(ex.feasible);
    const UserMetrics m = EvaluateUsers(inst, phi, ex.beamformers);
    CHECK(m.budget_ok);
    CHECK(m.qos_ok);
    CHECK(ex.min_ee <= EvaluateLifted(inst, grams, d.V).min_ee + 1e-6);
  }
}

TEST_CASE("unreachable rate threshold is reported as infeasible") {
  // Two users on one scalar channel cannot both reach SINR 3.
  const SystemInstance inst = DirectInstance(CMatrix::Constant(1, 1, 1.0),
                                             {CRowVector::Constant(1, 1.0), CRowVector::Constant(1, 1.0)},
                                             0.1, 0.5, 10.0, 2.0);
  const StarCoefficients phi = FullTransmission(1);
  const DinkelbachResult d = DinkelbachBeamforming(inst, phi, MrtInitialization(inst, phi));
  CHECK(d.status == BeamformingStatus::kQosInfeasible);
}

TEST_CASE("rank-one extraction reconstructs V") {
  GaussianStream rng(31);
  const SystemInstance inst = RandomInstance(rng, 2, 3, 2);
  const StarCoefficients phi = RandomPhi(rng, 2);
  LiftedBeamformers V;
  for (int k = 0; k < 2; ++k) {
    const CVector v = RandomComplex(rng, 3, 1).col(0);
    V.V.push_back(v * v.adjoint() * (2.0 / v.squaredNorm()));
  }
  const ExtractionResult ex = ExtractBeamformers(V, inst, phi);
  CHECK(ex.rank_one);
  for (int k = 0; k < 2; ++k) {
    const CVector& v = ex.beamformers.v[k];
    CHECK((v * v.adjoint() - V.V[k]).norm() <= 1e-8);
  }
}

TEST_CASE("isotropic V for one user keeps the principal vector") {
  // High SNR and small static power: spending P_max / M beats P_max.
  CRowVector g(2);
  g << 10.0 / std::sqrt(2.0), 10.0 / std::sqrt(2.0);
  SystemInstance inst = DirectInstance(CMatrix::Identity(2, 2), {g}, 1.0, 0.1, 10.0);
  const StarCoefficients phi = FullTransmission(2);
  LiftedBeamformers V;
  V.V.push_back(CMatrix::Identity(2, 2) * (10.0 / 2.0));
  const ExtractionResult ex = ExtractBeamformers(V, inst, phi);
  CHECK_FALSE(ex.rank_one);
  CHECK(ex.beamformers.v[0].squaredNorm() == doctest::Approx(5.0).epsilon(1e-10));
}

TEST_CASE("randomized extraction stays close to the relaxation") {
  int seeds = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GaussianStream rng(100 + seed);
    const SystemInstance inst = RandomInstance(rng, 2, 3, 3);
    const StarCoefficients phi = RandomPhi(rng, 3);
    LiftedBeamformers V;
    // Rank two, dominated by the matched direction.
    const std::vector<CRowVector> h = EffectiveChannels(inst, phi);
    for (int k = 0; k < 2; ++k) {
      const CVector d = h[k].adjoint().normalized();
      const CVector r = RandomComplex(rng, 3, 1).col(0).normalized();
      V.V.push_back(3.0 * d * d.adjoint() + 1.0 * r * r.adjoint());
    }
    BeamformingOptions opt;
    opt.randomization_seed = seed;
    const ExtractionResult ex = ExtractBeamformers(V, inst, phi, opt);
    const double bound = EvaluateLifted(inst, ChannelGrams(inst, phi), V).min_ee;
    CHECK_FALSE(ex.rank_one);
    CHECK(ex.beamformers.TotalPower() <= inst.power.p_max_watts * (1.0 + 1e-12));
    if (ex.min_ee >= 0.8 * bound) ++seeds;
  }
  CHECK(seeds == 10);
}

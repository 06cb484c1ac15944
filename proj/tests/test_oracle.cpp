#include <doctest.h>

#include <cmath>
#include <numbers>

#include "starris/oracle.hpp"
#include "test_helpers.hpp"

using namespace starris;
using starris::testing::RandomComplex;

namespace {

SystemInstance Tiny(std::uint64_t seed, int K, int M, int N) {
  GaussianStream rng(seed);
  SystemInstance inst;
  inst.dims = {K, M, N};
  inst.power.noise_power_watts = 0.2;
  inst.power.static_power_watts = 0.3;
  inst.power.p_max_watts = 4.0;
  inst.channels.H = RandomComplex(rng, N, M);
  for (int k = 0; k < K; ++k) {
    inst.channels.g.push_back(RandomComplex(rng, 1, N).row(0));
    inst.channels.sides.push_back(k % 2 ? UserSide::kReflection : UserSide::kTransmission);
  }
  return inst;
}

GridSpec Coarse() {
  GridSpec g;
  g.phase_points = 4;
  g.beta_step = 0.25;
  g.power_points = 9;
  return g;
}

}  // namespace

TEST_CASE("grid spec validation and refinement") {
  GridSpec g;
  CHECK_NOTHROW(g.Validate());
  CHECK(g.BetaLevels() == 21);
  const GridSpec r = g.Refined();
  CHECK(r.phase_points == 32);
  CHECK(r.beta_step == 0.025);
  CHECK(r.power_points == 399);
  GridSpec bad = g;
  bad.beta_step = 0.3;
  CHECK_THROWS_AS(bad.Validate(), ContractError);
  bad = g;
  bad.power_points = 1;
  CHECK_THROWS_AS(bad.Validate(), ContractError);
  bad = g;
  bad.phase_points = 1;
  CHECK_THROWS_AS(bad.Validate(), ContractError);
}

TEST_CASE("grid counts") {
  const SystemInstance inst = Tiny(1, 2, 1, 2);
  const GridCounts c = CountGrid(inst, GridSpec{});
  // One free phase per side, 21 levels per element, C(199 + 2, 2) allocations.
  CHECK(c.coefficients == 16ULL * 16ULL * 21ULL * 21ULL);
  CHECK(c.powers == 20100ULL);
  CHECK(c.directions == 1ULL);
  const GridCounts b = CountGrid(inst, GridSpec{}, RisMode::kReflectOnly);
  // One element per side: no free phase, fixed amplitudes.
  CHECK(b.coefficients == 1ULL);
}

TEST_CASE("the guard rejects oversized grids") {
  const SystemInstance big = Tiny(2, 2, 1, 8);
  CHECK_THROWS_AS(OracleGridSearch(big, GridSpec{}), ContractError);
  const SystemInstance multi = Tiny(3, 2, 2, 2);
  CHECK_THROWS_AS(OracleGridSearch(multi, GridSpec{}), ContractError);
  GridSpec sphere = Coarse();
  sphere.directions = BeamDirections::kSphere;
  CHECK_THROWS_AS(OracleGridSearch(Tiny(4, 1, 3, 1), sphere), ContractError);
}

TEST_CASE("single element, single user: analytic power optimum") {
  const SystemInstance inst = Tiny(5, 1, 1, 1);
  GridSpec g;
  g.phase_points = 4;
  g.power_points = 2001;
  const OracleResult o = OracleGridSearch(inst, g);
  REQUIRE(o.feasible);
  CHECK(o.phi.beta_t[0] == 1.0);

  const double a = std::norm(inst.channels.g[0][0] * inst.channels.H(0, 0));
  const double s2 = inst.power.noise_power_watts, P = inst.power.static_power_watts;
  auto ee = [&](double p) { return std::log2(1.0 + a * p / s2) / (p + P); };
  double lattice = 0.0, fine = 0.0;
  for (int i = 0; i < g.power_points; ++i) lattice = std::max(lattice, ee(4.0 * i / (g.power_points - 1)));
  for (int i = 0; i <= 1000000; ++i) fine = std::max(fine, ee(4.0 * i / 1e6));
  CHECK(o.min_ee == doctest::Approx(lattice).epsilon(1e-12));
  CHECK(o.min_ee <= fine);
  CHECK(o.min_ee >= fine * (1.0 - 1e-4));
}

TEST_CASE("a planted optimum is returned exactly") {
  // Cascaded gains 1 and e^{-j pi/2}: full transmission and theta_2 = pi/2 add
  // them coherently. A tight budget makes p = p_max optimal.
  SystemInstance inst;
  inst.dims = {1, 1, 2};
  CMatrix H(2, 1);
  H << 1.0, 1.0;
  CRowVector g(2);
  g << 1.0, Complex(0.0, -1.0);
  inst.channels = FixedInstance(H, {g}, {UserSide::kTransmission});
  inst.power.noise_power_watts = 1.0;
  inst.power.static_power_watts = 5.0;
  inst.power.p_max_watts = 0.5;
  const OracleResult o = OracleGridSearch(inst, Coarse());
  REQUIRE(o.feasible);
  CHECK(o.phi.beta_t[0] == 1.0);
  CHECK(o.phi.beta_t[1] == 1.0);
  CHECK(o.phi.theta_t[1] == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(o.beamformers.v[0].squaredNorm() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(o.min_ee == doctest::Approx(std::log2(1.0 + 4.0 * 0.5) / 5.5).epsilon(1e-12));
}

TEST_CASE("refining the grid never lowers the best value") {
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    const SystemInstance inst = Tiny(seed, 2, 1, 2);
    GridSpec g = Coarse();
    double prev = OracleGridSearch(inst, g).min_ee;
    for (int level = 0; level < 2; ++level) {
      g = g.Refined();
      const double v = OracleGridSearch(inst, g).min_ee;
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("oracle values agree with the system model") {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const SystemInstance inst = Tiny(seed, 2, 1, 2);
    for (RisMode mode : {RisMode::kStarEs, RisMode::kReflectOnly, RisMode::kTransmitOnly}) {
      const OracleResult o = OracleGridSearch(inst, Coarse(), mode);
      REQUIRE(o.feasible);
      const double check = MinUserEe(inst, o.phi, o.beamformers).value;
      CHECK(check == doctest::Approx(o.min_ee).epsilon(1e-12));
    }
    // Two antennas, both direction modes.
    const SystemInstance two = Tiny(seed + 100, 2, 2, 1);
    GridSpec g = Coarse();
    for (BeamDirections d : {BeamDirections::kMatchedFilter, BeamDirections::kSphere}) {
      g.directions = d;
      const OracleResult o = OracleGridSearch(two, g);
      REQUIRE(o.feasible);
      CHECK(MinUserEe(two, o.phi, o.beamformers).value == doctest::Approx(o.min_ee).epsilon(1e-12));
    }
  }
}

TEST_CASE("a single user never beats matched filtering with a sphere grid") {
  const SystemInstance inst = Tiny(30, 1, 2, 1);
  GridSpec g = Coarse();
  const double mf = OracleGridSearch(inst, g).min_ee;
  g.directions = BeamDirections::kSphere;
  CHECK(OracleGridSearch(inst, g).min_ee <= mf + 1e-12);
}

TEST_CASE("unreachable rates leave the grid empty") {
  SystemInstance inst = Tiny(40, 2, 1, 1);
  inst.power.qos_rate_threshold = 3.0;
  const OracleResult o = OracleGridSearch(inst, Coarse());
  CHECK_FALSE(o.feasible);
  CHECK(o.min_ee == 0.0);
}

TEST_CASE("grid points project onto themselves") {
  const SystemInstance inst = Tiny(50, 2, 1, 2);
  const OracleResult o = OracleGridSearch(inst, Coarse());
  const ProjectedPoint p = ProjectToGrid(inst, Coarse(), o.phi, o.beamformers);
  CHECK(MinUserEe(inst, p.phi, p.beamformers).value == doctest::Approx(o.min_ee).epsilon(1e-12));

  // Off-grid powers round down.
  BeamformerSet b = o.beamformers;
  b.v[0] = CVector::Constant(1, std::sqrt(0.7));
  const ProjectedPoint q = ProjectToGrid(inst, Coarse(), o.phi, b);
  CHECK(q.beamformers.v[0].squaredNorm() == doctest::Approx(0.5));
}

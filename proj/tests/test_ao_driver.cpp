#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "starris/ao_driver.hpp"
#include "starris/channel.hpp"
#include "test_helpers.hpp"

using namespace starris;
using starris::testing::RandomInstance;

namespace {

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void CheckReport(const SystemInstance& inst, const SolveReport& rep) {
  const double again = MinUserEe(inst, rep.phi, rep.beamformers).value;
  CHECK(std::abs(again - rep.min_ee) <= 1e-6 * std::max(1e-300, std::abs(again)));
  CHECK(rep.budget_ok);
  for (std::size_t i = 1; i < rep.history.size(); ++i) CHECK(rep.history[i] >= rep.history[i - 1] - 1e-6);
  CHECK(rep.history.size() == static_cast<std::size_t>(rep.outer_iterations + 1));
}

}  // namespace

TEST_CASE("initial coefficients per mode") {
  const StarCoefficients es = InitialCoefficients(3, RisMode::kStarEs);
  CHECK(es.beta_t.isApproxToConstant(0.5));
  const StarCoefficients ro = InitialCoefficients(3, RisMode::kReflectOnly);
  CHECK(ro.beta_r[0] == 1.0);
  CHECK(ro.beta_r[1] == 1.0);
  CHECK(ro.beta_t[2] == 1.0);
  CHECK(ro.beta_r[2] == 0.0);
  const StarCoefficients to = InitialCoefficients(3, RisMode::kTransmitOnly);
  CHECK(to.beta_t[0] == 1.0);
  CHECK(to.beta_r[2] == 1.0);
}

TEST_CASE("baseline views") {
  GaussianStream rng(1);
  SystemInstance inst = RandomInstance(rng, 2, 2, 4);
  CHECK_THROWS_AS(ApplyBaselineMode(inst, RisMode::kStarEs), ContractError);
  const BaselineView v = ApplyBaselineMode(inst, RisMode::kReflectOnly);
  CHECK_FALSE(v.degenerate);
  CHECK(v.layout.elements[1] == std::vector<int>{0, 1});

  // Everyone reflects: the transmit side is empty and the view says so.
  inst.channels.sides.assign(2, UserSide::kReflection);
  const BaselineView d = ApplyBaselineMode(inst, RisMode::kTransmitOnly);
  CHECK(d.degenerate);
  CHECK(d.reason.find("transmission") != std::string::npos);
  // A one-element panel leaves one side without elements.
  SystemInstance one = RandomInstance(rng, 2, 2, 1);
  CHECK(ApplyBaselineMode(one, RisMode::kReflectOnly).degenerate);
}

TEST_CASE("config contract") {
  GaussianStream rng(2);
  const SystemInstance inst = RandomInstance(rng, 2, 2, 2);
  AoConfig cfg;
  cfg.starts = 0;
  CHECK_THROWS_AS(AlternatingOptimize(inst, cfg), ContractError);
  cfg = {};
  cfg.tolerance = 0.0;
  CHECK_THROWS_AS(AlternatingOptimize(inst, cfg), ContractError);
  cfg = {};
  cfg.initial_phi = StarCoefficients::Uniform(3);
  CHECK_THROWS_AS(AlternatingOptimize(inst, cfg), ContractError);
  cfg = {};
  BeamformerSet b;
  b.v.assign(2, CVector::Zero(3));
  cfg.initial_beams = b;
  CHECK_THROWS_AS(AlternatingOptimize(inst, cfg), ContractError);
}

TEST_CASE("scalar system: matches a grid over power and coefficients") {
  SystemInstance inst;
  inst.dims = {1, 1, 1};
  inst.channels = FixedInstance(CMatrix::Constant(1, 1, Complex(0.8, 0.6)),
                                {CRowVector::Constant(1, Complex(1.5, -0.5))}, {UserSide::kReflection});
  inst.power.noise_power_watts = 0.1;
  inst.power.static_power_watts = 0.5;
  inst.power.p_max_watts = 4.0;
  const SolveReport rep = AlternatingOptimize(inst);
  REQUIRE(rep.feasible);
  CheckReport(inst, rep);

  const double a = std::norm(Complex(0.8, 0.6) * Complex(1.5, -0.5));
  double best = 0.0;
  // A single element's phase has no effect on |h|, so only beta and p are scanned.
  for (int b = 0; b <= 100; ++b) {
    const double gain = a * (b / 100.0);
    for (int i = 0; i <= 10000; ++i) {
      const double p = 4.0 * i / 10000.0;
      best = std::max(best, std::log2(1.0 + gain * p / 0.1) / (p + 0.5));
    }
  }
  CHECK(rep.min_ee == doctest::Approx(best).epsilon(2e-2));
  CHECK(rep.phi.beta_r[0] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("an optimal start converges in one outer iteration") {
  GaussianStream rng(7);
  const SystemInstance inst = RandomInstance(rng, 2, 2, 2);
  AoConfig cfg;
  cfg.starts = 1;
  const SolveReport first = AlternatingOptimize(inst, cfg);
  REQUIRE(first.feasible);
  cfg.initial_phi = first.phi;
  cfg.initial_beams = first.beamformers;
  const SolveReport again = AlternatingOptimize(inst, cfg);
  CHECK(again.status == AoStatus::kConverged);
  CHECK(again.outer_iterations == 1);
  CHECK(again.min_ee >= first.min_ee);
  CheckReport(inst, again);
}

TEST_CASE("history is monotone and reports are self-consistent in every mode") {
  GaussianStream rng(11);
  const SystemInstance inst = RandomInstance(rng, 2, 2, 4);
  for (RisMode mode : {RisMode::kStarEs, RisMode::kReflectOnly, RisMode::kTransmitOnly}) {
    AoConfig cfg;
    cfg.mode = mode;
    cfg.starts = 2;
    const SolveReport rep = AlternatingOptimize(inst, cfg);
    CHECK(rep.mode == mode);
    CHECK(rep.starts_run == 2);
    CheckReport(inst, rep);
    CHECK(rep.trace.rows.size() > 0);
    if (mode != RisMode::kStarEs) {
      // Baseline amplitudes never move.
      const StarCoefficients init = InitialCoefficients(4, mode);
      CHECK(rep.phi.beta_t == init.beta_t);
      CHECK(rep.phi.beta_r == init.beta_r);
    } else {
      for (int n = 0; n < 4; ++n) CHECK(rep.phi.beta_t[n] + rep.phi.beta_r[n] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("repeated runs are identical") {
  GaussianStream rng(13);
  const SystemInstance inst = RandomInstance(rng, 2, 2, 2);
  AoConfig cfg;
  cfg.starts = 2;
  const SolveReport a = AlternatingOptimize(inst, cfg);
  const SolveReport b = AlternatingOptimize(inst, cfg);
  CHECK(a.min_ee == b.min_ee);
  CHECK(a.history == b.history);
  CHECK(a.start == b.start);
}

TEST_CASE("star panel is not beaten by the baselines") {
  std::vector<double> es, ro, to;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GaussianStream rng(200 + seed);
    const SystemInstance inst = RandomInstance(rng, 2, 2, 4);
    AoConfig cfg;
    cfg.starts = 2;
    es.push_back(AlternatingOptimize(inst, cfg).min_ee);
    cfg.mode = RisMode::kReflectOnly;
    ro.push_back(AlternatingOptimize(inst, cfg).min_ee);
    cfg.mode = RisMode::kTransmitOnly;
    to.push_back(AlternatingOptimize(inst, cfg).min_ee);
  }
  CHECK(Median(ro) <= Median(es) + 1e-4);
  CHECK(Median(to) <= Median(es) + 1e-4);
}

TEST_CASE("six users at 6.6 bit/s/Hz on four antennas are infeasible") {
  // Six users at 6.6 bit/s/Hz need sum gamma / (1 + gamma) = 5.94 > 4 = M.
  SystemInstance inst;
  inst.dims = {6, 4, 30};
  inst.power.p_max_watts = DbmToWatt(50.0);
  inst.power.static_power_watts = DbmToWatt(5.0);
  inst.power.noise_power_watts = DbmToWatt(-20.0);
  inst.power.qos_rate_threshold = 6.6;
  inst.channels = GenerateInstance(1, inst.dims, Geometry::Circle(6), PathLossModel{});
  AoConfig cfg;
  cfg.starts = 1;
  const SolveReport rep = AlternatingOptimize(inst, cfg);
  CHECK(rep.status == AoStatus::kInfeasible);
  CHECK_FALSE(rep.feasible);
  CHECK_FALSE(rep.message.empty());
}

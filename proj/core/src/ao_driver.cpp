#include "starris/ao_driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "starris/channel.hpp"

namespace starris {

namespace {

// QoS first, then min-EE; equal counts as not worse.
bool NotWorse(bool qos_a, double ee_a, bool qos_b, double ee_b) {
  if (qos_a != qos_b) return qos_a;
  return ee_a >= ee_b;
}

void Tag(ConvergenceTrace& trace, int outer) {
  for (auto& r : trace.rows) r.outer = outer;
}

}  // namespace

void AoConfig::Validate() const {
  if (!(tolerance > 0.0)) throw ContractError("AoConfig: tolerance must be positive");
  if (max_iterations < 1) throw ContractError("AoConfig: need at least one outer iteration");
  if (starts < 1) throw ContractError("AoConfig: need at least one start");
  if (!(beamforming.epsilon_tol > 0.0) || !(beamforming.sca_tol > 0.0) ||
      !(relaxation.delta_tol > 0.0) || !(relaxation.objective_tol > 0.0) ||
      !(relaxation.delta0 > 0.0)) {
    throw ContractError("AoConfig: sub-module tolerances must be positive");
  }
  if (initial_phi) initial_phi->Validate();
}

const char* ToString(AoStatus status) {
  switch (status) {
    case AoStatus::kConverged: return "converged";
    case AoStatus::kIterationLimit: return "iteration_limit";
    case AoStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

StarCoefficients InitialCoefficients(int num_elements, RisMode mode) {
  StarCoefficients phi = StarCoefficients::Uniform(num_elements);
  if (mode == RisMode::kStarEs) return phi;
  const ElementLayout layout = MakeLayout(mode, num_elements);
  phi.beta_t.setZero();
  phi.beta_r.setZero();
  for (int n : layout.elements[0]) phi.beta_t[n] = 1.0;
  for (int n : layout.elements[1]) phi.beta_r[n] = 1.0;
  return phi;
}

BaselineView ApplyBaselineMode(const SystemInstance& instance, RisMode mode) {
  if (mode == RisMode::kStarEs) throw ContractError("ApplyBaselineMode: star_es is not a baseline");
  instance.Validate();
  const int N = instance.dims.num_ris_elements;
  BaselineView view;
  view.layout = MakeLayout(mode, N);
  view.initial = InitialCoefficients(N, mode);
  int users[2] = {0, 0};
  for (UserSide s : instance.channels.sides) ++users[SideIndex(s)];
  for (int c = 0; c < 2; ++c) {
    const char* name = c == 0 ? "transmission" : "reflection";
    if (users[c] == 0) {
      view.degenerate = true;
      view.reason += std::string("no users on the ") + name + " side; ";
    } else if (view.layout.elements[c].empty()) {
      view.degenerate = true;
      view.reason += std::string("no element serves the ") + name + " side; ";
    }
  }
  return view;
}

void EvaluateReport(const SystemInstance& instance, SolveReport& report) {
  const UserMetrics m = EvaluateUsers(instance, report.phi, report.beamformers);
  report.rates = m.rates;
  report.powers = m.powers;
  report.ees = m.ees;
  report.min_ee = m.min_ee.value;
  report.min_user = m.min_ee.user;
  double se = 0.0;
  for (double r : m.rates) se += r;
  report.avg_se = m.rates.empty() ? 0.0 : se / static_cast<double>(m.rates.size());
  report.budget_ok = m.budget_ok;
  report.qos_ok = m.qos_ok;
  report.feasible = m.budget_ok && m.qos_ok;
}

namespace {

StarCoefficients RandomCoefficients(int num_elements, RisMode mode, GaussianStream& rng) {
  auto unit = [&rng]() { return rng.Uniform(); };
  StarCoefficients phi = InitialCoefficients(num_elements, mode);
  for (int n = 0; n < num_elements; ++n) {
    if (mode == RisMode::kStarEs) {
      phi.beta_t[n] = unit();
      phi.beta_r[n] = 1.0 - phi.beta_t[n];
    }
    phi.theta_t[n] = 2.0 * kPi * unit();
    phi.theta_r[n] = 2.0 * kPi * unit();
  }
  return phi;
}

SolveReport RunFromStart(const SystemInstance& instance, const AoConfig& config,
                         const StarCoefficients& phi0, const std::optional<BeamformerSet>& beams0) {
  const int N = instance.dims.num_ris_elements;
  SolveReport rep;
  rep.mode = config.mode;
  ElementLayout layout = MakeLayout(config.mode, N);
  rep.phi = phi0;
  if (config.mode != RisMode::kStarEs) {
    const BaselineView view = ApplyBaselineMode(instance, config.mode);
    rep.degenerate_baseline = view.degenerate;
    if (view.degenerate) rep.message = view.reason;
  }
  if (beams0) {
    rep.beamformers = *beams0;
  } else {
    rep.beamformers = ExtractBeamformers(MrtInitialization(instance, rep.phi), instance, rep.phi,
                                         config.beamforming).beamformers;
  }
  EvaluateReport(instance, rep);
  rep.history.push_back(rep.min_ee);

  rep.status = AoStatus::kIterationLimit;
  for (int it = 1; it <= config.max_iterations; ++it) {
    rep.outer_iterations = it;
    const double before = rep.min_ee;

    // Beamforming stage. The current beams reach F >= 0 at their own min-EE,
    // so lambda can start there instead of at zero.
    BeamformingOptions bf_opt = config.beamforming;
    if (rep.budget_ok && rep.qos_ok) bf_opt.initial_lambda = std::max(bf_opt.initial_lambda, rep.min_ee);
    DinkelbachResult d = DinkelbachBeamforming(
        instance, rep.phi, LiftedBeamformers::FromVectors(rep.beamformers), bf_opt);
    Tag(d.trace, it);
    rep.trace.Append(d.trace);
    std::string stage = "bf:" + std::string(ToString(d.status));
    if (d.status == BeamformingStatus::kQosInfeasible) {
      if (it == 1 && !rep.qos_ok) {
        rep.status = AoStatus::kInfeasible;
        rep.message += "no beamformers meet the rate threshold at the initial coefficients";
        EvaluateReport(instance, rep);
        return rep;
      }
    } else if (d.status != BeamformingStatus::kSolverFailure) {
      const ExtractionResult ex = ExtractBeamformers(d.V, instance, rep.phi, config.beamforming);
      const UserMetrics m = EvaluateUsers(instance, rep.phi, ex.beamformers);
      if (!ex.rank_one) rep.randomized_beams = true;
      if (m.budget_ok && NotWorse(m.qos_ok, m.min_ee.value, rep.qos_ok, rep.min_ee)) {
        rep.beamformers = ex.beamformers;
        EvaluateReport(instance, rep);
      } else {
        stage += ",kept";
      }
    }

    // Phase stage, with lambda from the beams just chosen.
    RelaxationResult r = SequentialRelaxation(instance, rep.beamformers, rep.min_ee, rep.phi, layout,
                                              config.relaxation);
    Tag(r.trace, it);
    rep.trace.Append(r.trace);
    if (r.rank_one_failure) rep.rank_one_failure = true;
    stage += r.converged ? " phase:converged" : " phase:rank_one_failure";
    if (NotWorse(r.qos_ok, r.min_ee, rep.qos_ok, rep.min_ee)) {
      rep.phi = r.coefficients;
      EvaluateReport(instance, rep);
    }

    rep.history.push_back(rep.min_ee);
    TraceRow row;
    row.level = TraceLevel::kAo;
    row.outer = it;
    row.iteration = it;
    row.lambda = d.lambda;
    row.objective = rep.min_ee;
    row.min_ee = rep.min_ee;
    row.status = stage;
    rep.trace.rows.push_back(row);

    const double scale = std::max(std::abs(before), 1e-300);
    if (std::abs(rep.min_ee - before) / scale < config.tolerance) {
      rep.status = AoStatus::kConverged;
      break;
    }
  }
  EvaluateReport(instance, rep);
  return rep;
}

bool Better(const SolveReport& a, const SolveReport& b) {
  const bool fa = a.status != AoStatus::kInfeasible && a.feasible;
  const bool fb = b.status != AoStatus::kInfeasible && b.feasible;
  if (fa != fb) return fa;
  return a.min_ee > b.min_ee;
}

}  // namespace

SolveReport AlternatingOptimize(const SystemInstance& instance, const AoConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  instance.Validate();
  config.Validate();
  const int N = instance.dims.num_ris_elements;
  if (config.initial_phi && config.initial_phi->size() != N) {
    throw ContractError("AlternatingOptimize: initial coefficients have the wrong size");
  }
  if (config.initial_beams) {
    const auto& b = *config.initial_beams;
    bool ok = b.size() == instance.dims.num_users;
    for (const auto& v : b.v) ok = ok && v.size() == instance.dims.num_bs_antennas;
    if (!ok) throw ContractError("AlternatingOptimize: initial beamformers do not match the instance");
  }

  SolveReport best = RunFromStart(
      instance, config, config.initial_phi ? *config.initial_phi : InitialCoefficients(N, config.mode),
      config.initial_beams);
  GaussianStream rng(config.start_seed);
  for (int s = 1; s < config.starts; ++s) {
    SolveReport rep = RunFromStart(instance, config, RandomCoefficients(N, config.mode, rng), std::nullopt);
    rep.start = s;
    if (Better(rep, best)) best = std::move(rep);
  }
  best.starts_run = config.starts;
  best.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return best;
}

}  // namespace starris
